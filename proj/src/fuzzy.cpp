#include "fcsg/fuzzy.hpp"

#include <algorithm>
#include <cmath>

namespace fcsg {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) {
    throw ParameterError(std::string(what) + " must be > 0, got " + std::to_string(v));
  }
}

}  // namespace

TNormKind TNormKind::yager(double p) {
  require_positive(p, "Yager t-norm exponent p");
  return {Family::Yager, p};
}

TConormKind TConormKind::yager(double p) {
  require_positive(p, "Yager t-conorm exponent p");
  return {Family::Yager, p};
}

ComplementKind ComplementKind::sugeno(double lambda) {
  if (!(lambda > -1.0)) {
    throw ParameterError("Sugeno lambda must be > -1, got " + std::to_string(lambda));
  }
  return {Family::Sugeno, lambda};
}

ComplementKind ComplementKind::yager(double lambda) {
  require_positive(lambda, "Yager complement lambda");
  return {Family::Yager, lambda};
}

double tnorm(const TNormKind& kind, double x, double y) {
  switch (kind.family) {
    case TNormKind::Family::Godel:
      return std::min(x, y);
    case TNormKind::Family::Product:
      return x * y;
    case TNormKind::Family::Lukasiewicz:
      return std::max(0.0, x + y - 1.0);
    case TNormKind::Family::Yager: {
      require_positive(kind.p, "Yager t-norm exponent p");
      const double s =
          std::pow(std::pow(1.0 - x, kind.p) + std::pow(1.0 - y, kind.p), 1.0 / kind.p);
      return std::max(1.0 - s, 0.0);
    }
  }
  throw ParameterError("unknown t-norm family");
}

double tconorm(const TConormKind& kind, double x, double y) {
  switch (kind.family) {
    case TConormKind::Family::Godel:
      return std::max(x, y);
    case TConormKind::Family::ProbabilisticSum:
      return x + y - x * y;
    case TConormKind::Family::BoundedSum:
      return std::min(x + y, 1.0);
    case TConormKind::Family::Yager: {
      require_positive(kind.p, "Yager t-conorm exponent p");
      return std::min(std::pow(std::pow(x, kind.p) + std::pow(y, kind.p), 1.0 / kind.p),
                      1.0);
    }
  }
  throw ParameterError("unknown t-conorm family");
}

double complement(const ComplementKind& kind, double x) {
  switch (kind.family) {
    case ComplementKind::Family::Standard:
      return 1.0 - x;
    case ComplementKind::Family::Cosine:
      return 0.5 * (1.0 + std::cos(kPi * x));
    case ComplementKind::Family::Sugeno:
      if (!(kind.lambda > -1.0)) {
        throw ParameterError("Sugeno lambda must be > -1");
      }
      return (1.0 - x) / (1.0 + kind.lambda * x);
    case ComplementKind::Family::Yager:
      require_positive(kind.lambda, "Yager complement lambda");
      return std::pow(1.0 - std::pow(x, kind.lambda), 1.0 / kind.lambda);
  }
  throw ParameterError("unknown complement family");
}

double product_difference(double x, double y) { return x - x * y; }

double unified_boolean(const BarycentricWeights& c, double x, double y) {
  const double xy = x * y;
  // Convex combination of the four corner operators; each corner is in [0,1],
  // so the result is as well (modulo round-off dust).
  return snap_unit(c[0] * xy + c[1] * (x + y - xy) + c[2] * (x - xy) + c[3] * (y - xy));
}

UnifiedGrad unified_boolean_grad(const BarycentricWeights& c, double x, double y) {
  const double k = c[0] - c[1] - c[2] - c[3];
  UnifiedGrad g;
  g.dx = (c[1] + c[2]) + k * y;
  g.dy = (c[1] + c[3]) + k * x;
  const double xy = x * y;
  g.dc = {xy, x + y - xy, x - xy, y - xy};
  return g;
}

namespace {

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ParameterError(std::string(what) + " outside [0,1]: " + std::to_string(v));
  }
}

}  // namespace

double bilinear_boolean(double u, double v, double x, double y) {
  require_unit(u, "bilinear u");
  require_unit(v, "bilinear v");
  require_unit(x, "membership x");
  require_unit(y, "membership y");
  const double xy = x * y;
  const double uni = x + y - xy;
  const double inter = xy;
  const double diff_yx = y - xy;
  const double diff_xy = x - xy;
  return snap_unit((1.0 - u) * (1.0 - v) * uni + u * (1.0 - v) * inter +
                   (1.0 - u) * v * diff_yx + u * v * diff_xy);
}

BilinearGrad bilinear_boolean_grad(double u, double v, double x, double y) {
  const double w00 = (1.0 - u) * (1.0 - v);
  const double w10 = u * (1.0 - v);
  const double w01 = (1.0 - u) * v;
  const double w11 = u * v;
  const double xy = x * y;
  BilinearGrad g;
  // Corner derivatives: union (1-y, 1-x), intersection (y, x),
  // Y\X (-y, 1-x), X\Y (1-y, -x).
  g.dx = w00 * (1.0 - y) + w10 * y + w01 * (-y) + w11 * (1.0 - y);
  g.dy = w00 * (1.0 - x) + w10 * x + w01 * (1.0 - x) + w11 * (-x);
  const double uni = x + y - xy;
  g.du = (1.0 - v) * (xy - uni) + v * ((x - xy) - (y - xy));
  g.dv = (1.0 - u) * ((y - xy) - uni) + u * ((x - xy) - xy);
  return g;
}

MembershipValue tnorm(const TNormKind& kind, MembershipValue x, MembershipValue y) {
  return MembershipValue(snap_unit(tnorm(kind, x.value(), y.value())));
}

MembershipValue tconorm(const TConormKind& kind, MembershipValue x, MembershipValue y) {
  return MembershipValue(snap_unit(tconorm(kind, x.value(), y.value())));
}

MembershipValue complement(const ComplementKind& kind, MembershipValue x) {
  return MembershipValue(snap_unit(complement(kind, x.value())));
}

MembershipValue product_difference(MembershipValue x, MembershipValue y) {
  return MembershipValue(product_difference(x.value(), y.value()));
}

MembershipValue unified_boolean(const BarycentricWeights& c, MembershipValue x,
                                MembershipValue y) {
  return MembershipValue(unified_boolean(c, x.value(), y.value()));
}

MembershipValue bilinear_boolean(double u, double v, MembershipValue x, MembershipValue y) {
  return MembershipValue(bilinear_boolean(u, v, x.value(), y.value()));
}

}  // namespace fcsg
