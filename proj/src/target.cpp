#include "fcsg/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcsg/errors.hpp"

namespace fcsg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Raw controls whose softmax at the default omega/temperature is numerically
// one-hot: sin(10 * pi/20) = 1 for the selected corner, -1 elsewhere.
BooleanControl one_hot_control(int corner) {
  BooleanControl ctrl;
  for (int j = 0; j < 4; ++j) {
    ctrl.c_raw[static_cast<std::size_t>(j)] = (j == corner) ? kPi / 20.0 : -kPi / 20.0;
  }
  return ctrl;
}

CsgNode sphere_leaf(double cx, double cy, double radius, double sharpness) {
  SpherePrimitive s;
  s.dim = 2;
  s.center = {cx, cy, 0.0};
  // softplus(raw) = radius
  s.radius_raw = std::log(std::expm1(radius));
  s.sharpness = sharpness;
  CsgNode n;
  n.leaf = true;
  n.prim = s;
  return n;
}

CsgNode disc_quadric_leaf(double cx, double cy, double radius, double sharpness) {
  QuadricPrimitive q;
  q.dim = 2;
  q.q = {-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 2.0 * cx, 2.0 * cy, 0.0,
         radius * radius - cx * cx - cy * cy};
  q.sharpness = sharpness;
  CsgNode n;
  n.leaf = true;
  n.prim = q;
  return n;
}

CsgNode bool_node(int corner, int left, int right) {
  CsgNode n;
  n.control = one_hot_control(corner);
  n.left = left;
  n.right = right;
  return n;
}

// Corner indices in the operator tetrahedron.
constexpr int kInter = 0;
constexpr int kUnion = 1;
constexpr int kDiffLR = 2;

std::shared_ptr<const CsgTree> two_circles_tree() {
  std::vector<CsgNode> nodes;
  nodes.push_back(sphere_leaf(-0.4, 0.0, 0.35, 4.0));
  nodes.push_back(sphere_leaf(0.4, 0.0, 0.35, 4.0));
  nodes.push_back(bool_node(kUnion, 0, 1));
  return std::make_shared<CsgTree>(std::move(nodes), 2);
}

std::shared_ptr<const CsgTree> quad4_tree() {
  // ((A union B) minus C) union D
  std::vector<CsgNode> nodes;
  nodes.push_back(sphere_leaf(-0.35, 0.25, 0.4, 6.0));   // 0 A
  nodes.push_back(sphere_leaf(0.2, 0.25, 0.4, 6.0));     // 1 B
  nodes.push_back(bool_node(kUnion, 0, 1));              // 2
  nodes.push_back(sphere_leaf(-0.1, 0.3, 0.2, 6.0));     // 3 C
  nodes.push_back(bool_node(kDiffLR, 2, 3));             // 4
  nodes.push_back(sphere_leaf(0.1, -0.4, 0.3, 6.0));     // 5 D
  nodes.push_back(bool_node(kUnion, 4, 5));              // 6
  return std::make_shared<CsgTree>(std::move(nodes), 2);
}

std::shared_ptr<const CsgTree> quadrics8_tree() {
  std::vector<CsgNode> nodes;
  nodes.push_back(disc_quadric_leaf(-0.50, 0.45, 0.30, 1.0));  // 0
  nodes.push_back(disc_quadric_leaf(-0.15, 0.45, 0.30, 1.0));  // 1
  nodes.push_back(bool_node(kUnion, 0, 1));                    // 2  blob
  nodes.push_back(disc_quadric_leaf(0.45, 0.45, 0.32, 1.0));   // 3
  nodes.push_back(disc_quadric_leaf(0.45, 0.45, 0.16, 1.0));   // 4
  nodes.push_back(bool_node(kDiffLR, 3, 4));                   // 5  ring
  nodes.push_back(bool_node(kUnion, 2, 5));                    // 6
  nodes.push_back(disc_quadric_leaf(-0.45, -0.45, 0.32, 1.0)); // 7
  nodes.push_back(disc_quadric_leaf(-0.22, -0.45, 0.32, 1.0)); // 8
  nodes.push_back(bool_node(kInter, 7, 8));                    // 9  lens
  nodes.push_back(disc_quadric_leaf(0.45, -0.45, 0.32, 1.0));  // 10
  nodes.push_back(disc_quadric_leaf(0.62, -0.45, 0.22, 1.0));  // 11
  nodes.push_back(bool_node(kDiffLR, 10, 11));                 // 12 crescent
  nodes.push_back(bool_node(kUnion, 9, 12));                   // 13
  nodes.push_back(bool_node(kUnion, 6, 13));                   // 14
  return std::make_shared<CsgTree>(std::move(nodes), 2);
}

std::shared_ptr<const CsgTree> blob_tree() {
  std::vector<CsgNode> nodes;
  nodes.push_back(sphere_leaf(-0.2, 0.1, 0.35, 3.0));
  nodes.push_back(sphere_leaf(0.25, 0.2, 0.3, 2.0));
  nodes.push_back(bool_node(kUnion, 0, 1));
  nodes.push_back(sphere_leaf(0.0, -0.25, 0.35, 4.0));
  nodes.push_back(bool_node(kUnion, 2, 3));
  return std::make_shared<CsgTree>(std::move(nodes), 2);
}

bool all_leaves_sphere_or_plane(const CsgTree& tree) {
  for (const CsgNode& n : tree.nodes()) {
    if (n.leaf && !std::holds_alternative<SpherePrimitive>(n.prim) &&
        !std::holds_alternative<PlanePrimitive>(n.prim)) {
      return false;
    }
  }
  return true;
}

bool in_box(const Point& p, const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  for (int i = 0; i < p.dim; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    if (p.c[k] < lo[k] || p.c[k] > hi[k]) return false;
  }
  return true;
}

}  // namespace

Point TargetOracle::uniform_point(Rng& rng) const {
  Point p;
  p.dim = dim;
  for (int i = 0; i < dim; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    p.c[k] = uniform_range(rng, lo[k], hi[k]);
  }
  return p;
}

TargetOracle make_tree_target(std::shared_ptr<const CsgTree> tree, bool crisp) {
  TargetOracle oracle;
  oracle.dim = tree->dim();
  oracle.occupancy = [tree, crisp](const Point& p) {
    const double v = eval_stack(*tree, p);
    return crisp ? (v > 0.5 ? 1.0 : 0.0) : v;
  };
  if (crisp) {
    oracle.band_value = [tree](const Point& p) { return eval_stack(*tree, p); };
  }

  if (crisp && all_leaves_sphere_or_plane(*tree)) {
    // Candidate points on a random leaf surface, accepted when the crisp
    // tree occupancy flips across the leaf surface (so the candidate lies on
    // the boundary of the combined solid).
    auto lo = oracle.lo;
    auto hi = oracle.hi;
    const auto occ = oracle.occupancy;
    std::vector<int> leaf_ids;
    for (int i = 0; i < tree->size(); ++i) {
      if (tree->node(i).leaf) leaf_ids.push_back(i);
    }
    oracle.surface_sample = [tree, occ, lo, hi, leaf_ids](Rng& rng) {
      constexpr int kBudget = 10000;
      // Soft blending shifts the crisp boundary of the combined solid off the
      // leaf surfaces, so search a window along the leaf normal and bisect to
      // the actual occupancy flip.
      constexpr double kWindow = 0.05;
      for (int attempt = 0; attempt < kBudget; ++attempt) {
        const int leaf =
            leaf_ids[static_cast<std::size_t>(uniform_index(rng, leaf_ids.size()))];
        const Primitive& prim = tree->node(leaf).prim;
        Point q;
        q.dim = tree->dim();
        std::array<double, 3> normal{0.0, 0.0, 0.0};
        if (const auto* s = std::get_if<SpherePrimitive>(&prim)) {
          const double r = softplus(s->radius_raw);
          if (s->dim == 2) {
            const double theta = uniform_range(rng, 0.0, 2.0 * kPi);
            normal = {std::cos(theta), std::sin(theta), 0.0};
          } else {
            const double z = uniform_range(rng, -1.0, 1.0);
            const double phi = uniform_range(rng, 0.0, 2.0 * kPi);
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            normal = {rho * std::cos(phi), rho * std::sin(phi), z};
          }
          for (int i = 0; i < s->dim; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            q.c[k] = s->center[k] + r * normal[k];
          }
        } else {
          const auto& pl = std::get<PlanePrimitive>(prim);
          double mag2 = 0.0;
          Point u;
          u.dim = tree->dim();
          for (int i = 0; i < pl.dim; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            u.c[k] = uniform_range(rng, lo[k], hi[k]);
            mag2 += pl.normal[k] * pl.normal[k];
          }
          if (mag2 == 0.0) continue;
          double f = pl.offset;
          for (int i = 0; i < pl.dim; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            f += pl.normal[k] * u.c[k];
          }
          const double mag = std::sqrt(mag2);
          for (int i = 0; i < pl.dim; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            q.c[k] = u.c[k] - pl.normal[k] * f / mag2;
            normal[k] = pl.normal[k] / mag;
          }
        }
        if (!in_box(q, lo, hi)) continue;
        const auto at = [&](double t) {
          Point r = q;
          for (int i = 0; i < q.dim; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            r.c[k] += t * normal[k];
          }
          return r;
        };
        double t_lo = -kWindow, t_hi = kWindow;
        const double o_lo = occ(at(t_lo));
        if (occ(at(t_hi)) == o_lo) continue;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (t_lo + t_hi);
          (occ(at(mid)) == o_lo ? t_lo : t_hi) = mid;
        }
        const Point found = at(0.5 * (t_lo + t_hi));
        if (in_box(found, lo, hi)) return found;
      }
      throw SamplingError("surface sampler exhausted its candidate budget");
    };
  }
  return oracle;
}

namespace {

// Uniform bucket grid for nearest-sample lookups.
class NearestIndex {
 public:
  NearestIndex(PointSampleDataset ds) : ds_(std::move(ds)) {
    for (int i = 0; i < ds_.dim; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      lo_[k] = std::numeric_limits<double>::infinity();
      hi_[k] = -std::numeric_limits<double>::infinity();
    }
    for (const Point& p : ds_.points) {
      for (int i = 0; i < ds_.dim; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        lo_[k] = std::min(lo_[k], p.c[k]);
        hi_[k] = std::max(hi_[k], p.c[k]);
      }
    }
    for (int i = 0; i < ds_.dim; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      if (!(hi_[k] > lo_[k])) hi_[k] = lo_[k] + 1.0;
      cell_[k] = (hi_[k] - lo_[k]) / kRes;
    }
    const std::size_t n_cells =
        ds_.dim == 2 ? kRes * kRes : kRes * kRes * kRes;
    buckets_.resize(n_cells);
    for (std::size_t i = 0; i < ds_.points.size(); ++i) {
      buckets_[cell_index(ds_.points[i])].push_back(static_cast<int>(i));
    }
  }

  double occupancy_at(const Point& p) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::array<int, 3> c = cell_coords(p);
    for (int ring = 0; ring < static_cast<int>(kRes); ++ring) {
      scan_ring(p, c, ring, best, best_d2);
      if (best >= 0) {
        // The next ring cannot contain anything closer once the best distance
        // is under the ring's minimum separation.
        const double ring_min = ring * min_cell();
        if (std::sqrt(best_d2) <= ring_min) break;
      }
    }
    if (best < 0) throw SamplingError("dataset target has no samples");
    return ds_.occ[static_cast<std::size_t>(best)];
  }

  const PointSampleDataset& dataset() const { return ds_; }
  std::array<double, 3> lo() const { return lo_; }
  std::array<double, 3> hi() const { return hi_; }

 private:
  static constexpr std::size_t kRes = 24;

  double min_cell() const {
    double m = cell_[0];
    for (int i = 1; i < ds_.dim; ++i) m = std::min(m, cell_[static_cast<std::size_t>(i)]);
    return m;
  }

  std::array<int, 3> cell_coords(const Point& p) const {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < ds_.dim; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      int v = static_cast<int>((p.c[k] - lo_[k]) / cell_[k]);
      c[k] = std::clamp(v, 0, static_cast<int>(kRes) - 1);
    }
    return c;
  }

  std::size_t cell_index(const Point& p) const {
    const auto c = cell_coords(p);
    return flatten(c);
  }

  std::size_t flatten(const std::array<int, 3>& c) const {
    if (ds_.dim == 2) {
      return static_cast<std::size_t>(c[0]) * kRes + static_cast<std::size_t>(c[1]);
    }
    return (static_cast<std::size_t>(c[0]) * kRes + static_cast<std::size_t>(c[1])) * kRes +
           static_cast<std::size_t>(c[2]);
  }

  void consider(const Point& p, const std::array<int, 3>& c, int& best, double& best_d2) const {
    for (int i = 0; i < ds_.dim; ++i) {
      if (c[static_cast<std::size_t>(i)] < 0 ||
          c[static_cast<std::size_t>(i)] >= static_cast<int>(kRes)) {
        return;
      }
    }
    for (int idx : buckets_[flatten(c)]) {
      const Point& s = ds_.points[static_cast<std::size_t>(idx)];
      double d2 = 0.0;
      for (int i = 0; i < ds_.dim; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double d = p.c[k] - s.c[k];
        d2 += d * d;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best = idx;
      }
    }
  }

  void scan_ring(const Point& p, const std::array<int, 3>& center, int ring, int& best,
                 double& best_d2) const {
    if (ds_.dim == 2) {
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          consider(p, {center[0] + dx, center[1] + dy, 0}, best, best_d2);
        }
      }
    } else {
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          for (int dz = -ring; dz <= ring; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
            consider(p, {center[0] + dx, center[1] + dy, center[2] + dz}, best, best_d2);
          }
        }
      }
    }
  }

  PointSampleDataset ds_;
  std::array<double, 3> lo_{}, hi_{};
  std::array<double, 3> cell_{1.0, 1.0, 1.0};
  std::vector<std::vector<int>> buckets_;
};

}  // namespace

TargetOracle make_dataset_target(PointSampleDataset dataset) {
  if (dataset.points.empty()) throw ParameterError("dataset target has no samples");
  auto index = std::make_shared<NearestIndex>(std::move(dataset));
  TargetOracle oracle;
  oracle.dim = index->dataset().dim;
  oracle.lo = index->lo();
  oracle.hi = index->hi();
  oracle.occupancy = [index](const Point& p) { return index->occupancy_at(p); };
  return oracle;
}

std::shared_ptr<const CsgTree> builtin_target_tree(const std::string& name) {
  if (name == "two-circles") return two_circles_tree();
  if (name == "quad4") return quad4_tree();
  if (name == "quadrics8") return quadrics8_tree();
  if (name == "blob") return blob_tree();
  throw ParameterError("unknown builtin target '" + name + "'");
}

bool builtin_target_default_crisp(const std::string& name) {
  return name == "quad4" || name == "quadrics8";
}

TargetOracle builtin_target(const std::string& name, bool crisp) {
  return make_tree_target(builtin_target_tree(name), crisp);
}

}  // namespace fcsg
