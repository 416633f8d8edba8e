#pragma once

#include <cmath>

#include "fcsg/errors.hpp"

namespace fcsg {

/// A soft occupancy value in [0,1]. Construction is range-checked, never
/// clamped; arithmetic that can accumulate floating-point dust is expected
/// to snap its result before constructing one of these.
class MembershipValue {
 public:
  explicit MembershipValue(double v) : v_(checked(v)) {}

  double value() const { return v_; }

 private:
  static double checked(double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("membership value outside [0,1]: " + std::to_string(v));
    }
    return v;
  }

  double v_;
};

// Rounds away sub-1e-12 excursions outside [0,1] produced by floating-point
// round-off in otherwise range-closed arithmetic. Anything larger is a bug
// and is left alone so the MembershipValue constructor rejects it.
inline double snap_unit(double v) {
  constexpr double kDust = 1e-12;
  if (v < 0.0 && v > -kDust) return 0.0;
  if (v > 1.0 && v < 1.0 + kDust) return 1.0;
  return v;
}

}  // namespace fcsg
