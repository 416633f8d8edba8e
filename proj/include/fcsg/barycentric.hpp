#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fcsg/errors.hpp"
#include "fcsg/membership.hpp"

namespace fcsg {

/// Barycentric coordinates over the operator tetrahedron
/// (intersection, union, X\Y, Y\X). Nonnegative, summing to one
/// within 1e-9 (tolerant of softmax round-off).
class BarycentricWeights {
 public:
  BarycentricWeights(double c0, double c1, double c2, double c3)
      : c_{snap_unit(c0), snap_unit(c1), snap_unit(c2), snap_unit(c3)} {
    double sum = 0.0;
    for (double ci : c_) {
      if (!(ci >= 0.0 && ci <= 1.0)) {
        throw ParameterError("barycentric weight outside [0,1]: " + std::to_string(ci));
      }
      sum += ci;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ParameterError("barycentric weights sum to " + std::to_string(sum) +
                           ", expected 1 within 1e-9");
    }
  }

  static BarycentricWeights one_hot(int i) {
    if (i < 0 || i > 3) throw ParameterError("one_hot index must be in [0,3]");
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    c[static_cast<std::size_t>(i)] = 1.0;
    return BarycentricWeights(c[0], c[1], c[2], c[3]);
  }

  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  const std::array<double, 4>& data() const { return c_; }

 private:
  std::array<double, 4> c_;
};

}  // namespace fcsg
