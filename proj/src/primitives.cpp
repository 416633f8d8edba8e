#include "fcsg/primitives.hpp"

#include <algorithm>
#include <string>

namespace fcsg {

namespace {

constexpr std::array<int, 6> kQuadricSlots2d{0, 1, 3, 6, 7, 9};

void require_dim(int prim_dim, int point_dim) {
  if (prim_dim != point_dim) {
    throw ShapeError("point dimension " + std::to_string(point_dim) +
                     " does not match primitive dimension " + std::to_string(prim_dim));
  }
}

int check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw ParameterError("primitive dimension must be 2 or 3, got " + std::to_string(dim));
  }
  return dim;
}

}  // namespace

int primitive_dim(const Primitive& prim) {
  return std::visit([](const auto& p) { return p.dim; }, prim);
}

int param_count(const Primitive& prim) {
  struct Counter {
    int operator()(const QuadricPrimitive& p) const { return p.dim == 3 ? 11 : 7; }
    int operator()(const SpherePrimitive& p) const { return p.dim + 2; }
    int operator()(const PlanePrimitive& p) const { return p.dim + 2; }
    int operator()(const ConstantPrimitive&) const { return 0; }
  };
  return std::visit(Counter{}, prim);
}

void get_params(const Primitive& prim, std::span<double> out) {
  std::size_t k = 0;
  if (const auto* q = std::get_if<QuadricPrimitive>(&prim)) {
    if (q->dim == 3) {
      for (double qi : q->q) out[k++] = qi;
    } else {
      for (int slot : kQuadricSlots2d) out[k++] = q->q[static_cast<std::size_t>(slot)];
    }
    out[k++] = q->sharpness;
  } else if (const auto* s = std::get_if<SpherePrimitive>(&prim)) {
    for (int i = 0; i < s->dim; ++i) out[k++] = s->center[static_cast<std::size_t>(i)];
    out[k++] = s->radius_raw;
    out[k++] = s->sharpness;
  } else if (const auto* pl = std::get_if<PlanePrimitive>(&prim)) {
    for (int i = 0; i < pl->dim; ++i) out[k++] = pl->normal[static_cast<std::size_t>(i)];
    out[k++] = pl->offset;
    out[k++] = pl->sharpness;
  }
}

void set_params(Primitive& prim, std::span<const double> in) {
  std::size_t k = 0;
  if (auto* q = std::get_if<QuadricPrimitive>(&prim)) {
    if (q->dim == 3) {
      for (double& qi : q->q) qi = in[k++];
    } else {
      for (int slot : kQuadricSlots2d) q->q[static_cast<std::size_t>(slot)] = in[k++];
    }
    q->sharpness = in[k++];
  } else if (auto* s = std::get_if<SpherePrimitive>(&prim)) {
    for (int i = 0; i < s->dim; ++i) s->center[static_cast<std::size_t>(i)] = in[k++];
    s->radius_raw = in[k++];
    s->sharpness = in[k++];
  } else if (auto* pl = std::get_if<PlanePrimitive>(&prim)) {
    for (int i = 0; i < pl->dim; ++i) pl->normal[static_cast<std::size_t>(i)] = in[k++];
    pl->offset = in[k++];
    pl->sharpness = in[k++];
  }
}

double quadric_field(const QuadricPrimitive& prim, const Point& p) {
  require_dim(prim.dim, p.dim);
  const double x = p.c[0], y = p.c[1], z = prim.dim == 3 ? p.c[2] : 0.0;
  const auto& q = prim.q;
  return q[0] * x * x + q[1] * y * y + q[2] * z * z + q[3] * x * y + q[4] * y * z +
         q[5] * z * x + q[6] * x + q[7] * y + q[8] * z + q[9];
}

double field(const Primitive& prim, const Point& p) {
  if (const auto* q = std::get_if<QuadricPrimitive>(&prim)) {
    return quadric_field(*q, p);
  }
  if (const auto* s = std::get_if<SpherePrimitive>(&prim)) {
    require_dim(s->dim, p.dim);
    const double r = softplus(s->radius_raw);
    double d2 = 0.0;
    for (int i = 0; i < s->dim; ++i) {
      const double d = p.c[static_cast<std::size_t>(i)] - s->center[static_cast<std::size_t>(i)];
      d2 += d * d;
    }
    return r * r - d2;
  }
  if (const auto* pl = std::get_if<PlanePrimitive>(&prim)) {
    require_dim(pl->dim, p.dim);
    double dot = 0.0;
    for (int i = 0; i < pl->dim; ++i) {
      dot += pl->normal[static_cast<std::size_t>(i)] * p.c[static_cast<std::size_t>(i)];
    }
    return dot + pl->offset;
  }
  throw ParameterError("constant primitive has no field");
}

double occupancy(const Primitive& prim, const Point& p) {
  if (const auto* c = std::get_if<ConstantPrimitive>(&prim)) {
    return c->value;
  }
  const double s = std::visit(
      [](const auto& pr) {
        if constexpr (std::is_same_v<std::decay_t<decltype(pr)>, ConstantPrimitive>) {
          return 0.0;
        } else {
          return pr.sharpness;
        }
      },
      prim);
  return interior_sigmoid(s * field(prim, p));
}

MembershipValue primitive_occupancy(const Primitive& prim, const Point& p) {
  return MembershipValue(occupancy(prim, p));
}

void occupancy_grad(const Primitive& prim, const Point& p, std::span<double> dparams) {
  std::fill(dparams.begin(), dparams.end(), 0.0);
  if (std::holds_alternative<ConstantPrimitive>(prim)) return;

  const double f = field(prim, p);
  const double s = std::visit(
      [](const auto& pr) {
        if constexpr (std::is_same_v<std::decay_t<decltype(pr)>, ConstantPrimitive>) {
          return 0.0;
        } else {
          return pr.sharpness;
        }
      },
      prim);
  const double sg = sigmoid(s * f);
  const double dsig = sg * (1.0 - sg);  // d sigmoid / d argument

  std::size_t k = 0;
  if (const auto* q = std::get_if<QuadricPrimitive>(&prim)) {
    const double x = p.c[0], y = p.c[1], z = q->dim == 3 ? p.c[2] : 0.0;
    const std::array<double, 10> df{x * x, y * y, z * z, x * y, y * z,
                                    z * x, x,     y,     z,     1.0};
    if (q->dim == 3) {
      for (double d : df) dparams[k++] = dsig * s * d;
    } else {
      for (int slot : kQuadricSlots2d) {
        dparams[k++] = dsig * s * df[static_cast<std::size_t>(slot)];
      }
    }
  } else if (const auto* sp = std::get_if<SpherePrimitive>(&prim)) {
    for (int i = 0; i < sp->dim; ++i) {
      const double d = p.c[static_cast<std::size_t>(i)] - sp->center[static_cast<std::size_t>(i)];
      dparams[k++] = dsig * s * 2.0 * d;  // d field / d center_i = 2 (p_i - c_i)
    }
    const double r = softplus(sp->radius_raw);
    dparams[k++] = dsig * s * 2.0 * r * sigmoid(sp->radius_raw);  // softplus' = sigmoid
  } else if (const auto* pl = std::get_if<PlanePrimitive>(&prim)) {
    for (int i = 0; i < pl->dim; ++i) {
      dparams[k++] = dsig * s * p.c[static_cast<std::size_t>(i)];
    }
    dparams[k++] = dsig * s;  // offset
  }
  dparams[k] = dsig * f;  // sharpness
}

Primitive init_primitive(Rng& rng, PrimitiveKind kind, int dim) {
  check_dim(dim);
  switch (kind) {
    case PrimitiveKind::Quadric: {
      QuadricPrimitive q;
      q.dim = dim;
      if (dim == 3) {
        for (double& qi : q.q) qi = uniform_pm_half(rng);
      } else {
        for (int slot : kQuadricSlots2d) {
          q.q[static_cast<std::size_t>(slot)] = uniform_pm_half(rng);
        }
      }
      q.sharpness = uniform_pm_half(rng);
      return q;
    }
    case PrimitiveKind::Sphere: {
      SpherePrimitive s;
      s.dim = dim;
      for (int i = 0; i < dim; ++i) s.center[static_cast<std::size_t>(i)] = uniform_pm_half(rng);
      s.radius_raw = uniform_pm_half(rng);
      s.sharpness = uniform_pm_half(rng);
      return s;
    }
    case PrimitiveKind::Plane: {
      PlanePrimitive pl;
      pl.dim = dim;
      pl.normal = {0.0, 0.0, 0.0};
      for (int i = 0; i < dim; ++i) pl.normal[static_cast<std::size_t>(i)] = uniform_pm_half(rng);
      pl.offset = uniform_pm_half(rng);
      pl.sharpness = uniform_pm_half(rng);
      return pl;
    }
  }
  throw ParameterError("unknown primitive kind");
}

}  // namespace fcsg
