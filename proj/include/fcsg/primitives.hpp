#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <variant>

#include "fcsg/errors.hpp"
#include "fcsg/membership.hpp"
#include "fcsg/rng.hpp"

namespace fcsg {

struct Point {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  int dim = 3;

  static Point xy(double x, double y) { return Point{{x, y, 0.0}, 2}; }
  static Point xyz(double x, double y, double z) { return Point{{x, y, z}, 3}; }
};

/// q(x,y,z) = q0 x^2 + q1 y^2 + q2 z^2 + q3 xy + q4 yz + q5 zx
///          + q6 x + q7 y + q8 z + q9, positive inside.
/// In 2D the z-bearing slots (q2, q4, q5, q8) are frozen at zero and are not
/// trainable.
struct QuadricPrimitive {
  std::array<double, 10> q{};
  double sharpness = 0.0;
  int dim = 3;
};

/// Radius kept positive through softplus of an unconstrained scalar.
struct SpherePrimitive {
  std::array<double, 3> center{};
  double radius_raw = 1.0;  // radius = softplus(radius_raw)
  double sharpness = 0.0;
  int dim = 3;
};

struct PlanePrimitive {
  std::array<double, 3> normal{0.0, 0.0, 1.0};
  double offset = 0.0;
  double sharpness = 0.0;
  int dim = 3;
};

/// Constant occupancy leaf; produced by pruning, has no trainable parameters.
struct ConstantPrimitive {
  double value = 0.0;  // 0 or 1
  int dim = 3;
};

using Primitive =
    std::variant<QuadricPrimitive, SpherePrimitive, PlanePrimitive, ConstantPrimitive>;

enum class PrimitiveKind { Quadric, Sphere, Plane };

// Numerically stable logistic.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Logistic nudged off the saturated endpoints so occupancies of parametric
// primitives stay strictly inside (0,1).
inline double interior_sigmoid(double z) {
  const double v = sigmoid(z);
  if (v <= 0.0) return std::numeric_limits<double>::denorm_min();
  if (v >= 1.0) return std::nextafter(1.0, 0.0);
  return v;
}

inline double softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(z));
}

int primitive_dim(const Primitive& prim);

/// Number of trainable scalars (sharpness included, constants have none).
int param_count(const Primitive& prim);

/// Flat trainable-parameter access. Order: quadric = active q slots then
/// sharpness; sphere = center, radius_raw, sharpness; plane = normal,
/// offset, sharpness.
void get_params(const Primitive& prim, std::span<double> out);
void set_params(Primitive& prim, std::span<const double> in);

double quadric_field(const QuadricPrimitive& prim, const Point& p);
double field(const Primitive& prim, const Point& p);

/// sigmoid(sharpness * field), strictly in (0,1) for parametric primitives.
double occupancy(const Primitive& prim, const Point& p);
MembershipValue primitive_occupancy(const Primitive& prim, const Point& p);

/// d occupancy / d trainable params, laid out exactly like get_params.
void occupancy_grad(const Primitive& prim, const Point& p, std::span<double> dparams);

/// All trainable scalars i.i.d. uniform on [-0.5, 0.5].
Primitive init_primitive(Rng& rng, PrimitiveKind kind, int dim);

}  // namespace fcsg
