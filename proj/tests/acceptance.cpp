// Acceptance gate: ten self-contained checks, one pass/fail line each.
// Tolerances are pinned here on purpose; run with a criterion number to run
// just that one (useful while profiling).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fcsg/autodiff.hpp"
#include "fcsg/fuzzy.hpp"
#include "fcsg/io.hpp"
#include "fcsg/optimizer.hpp"
#include "fcsg/pruning.hpp"
#include "fcsg/target.hpp"
#include "fcsg/tree.hpp"

using namespace fcsg;

namespace {

constexpr double kPi = 3.14159265358979323846;

BooleanControl one_hot_control(int corner) {
  BooleanControl ctrl;
  for (int j = 0; j < 4; ++j) {
    ctrl.c_raw[static_cast<std::size_t>(j)] = (j == corner) ? kPi / 20.0 : -kPi / 20.0;
  }
  return ctrl;
}

CsgNode circle_leaf(double cx, double cy, double radius, double sharpness) {
  SpherePrimitive s;
  s.dim = 2;
  s.center = {cx, cy, 0.0};
  s.radius_raw = std::log(std::expm1(radius));
  s.sharpness = sharpness;
  CsgNode n;
  n.leaf = true;
  n.prim = s;
  return n;
}

struct Failure {
  int count = 0;
  std::string first;

  void note(const std::string& what) {
    if (count == 0) first = what;
    ++count;
  }
  explicit operator bool() const { return count > 0; }
};

// ---------------------------------------------------------------------------
// 1. Fuzzy axiom suite: 1e5 randomized boundary / monotonicity /
//    commutativity / associativity checks; product at 1e-12, Yager at 1e-9.
bool criterion1(std::string& detail) {
  struct Arm {
    TNormKind tn;
    TConormKind tc;
    double tol;
    const char* name;
  };
  const std::vector<Arm> arms{
      {TNormKind::product(), TConormKind::probabilistic_sum(), 1e-12, "product"},
      {TNormKind::yager(1.0), TConormKind::yager(1.0), 1e-9, "yager p=1"},
      {TNormKind::yager(2.0), TConormKind::yager(2.0), 1e-9, "yager p=2"},
      {TNormKind::yager(5.0), TConormKind::yager(5.0), 1e-9, "yager p=5"},
  };
  Failure fail;
  const int checks_per_arm = 100000 / static_cast<int>(arms.size());
  for (const Arm& arm : arms) {
    Rng rng(101);
    for (int i = 0; i < checks_per_arm; ++i) {
      const double x = uniform01(rng), y = uniform01(rng), z = uniform01(rng);
      if (std::abs(tnorm(arm.tn, x, 1.0) - x) > arm.tol) fail.note(std::string(arm.name) + " t-norm boundary");
      if (std::abs(tconorm(arm.tc, x, 0.0) - x) > arm.tol) fail.note(std::string(arm.name) + " t-conorm boundary");
      if (std::abs(tnorm(arm.tn, x, y) - tnorm(arm.tn, y, x)) > arm.tol) fail.note(std::string(arm.name) + " commutativity");
      if (std::abs(tconorm(arm.tc, x, y) - tconorm(arm.tc, y, x)) > arm.tol) fail.note(std::string(arm.name) + " commutativity");
      if (std::abs(tnorm(arm.tn, x, tnorm(arm.tn, y, z)) - tnorm(arm.tn, tnorm(arm.tn, x, y), z)) > arm.tol) {
        fail.note(std::string(arm.name) + " associativity");
      }
      if (std::abs(tconorm(arm.tc, x, tconorm(arm.tc, y, z)) - tconorm(arm.tc, tconorm(arm.tc, x, y), z)) > arm.tol) {
        fail.note(std::string(arm.name) + " associativity");
      }
      const double lo = std::min(y, z), hi = std::max(y, z);
      if (tnorm(arm.tn, x, lo) > tnorm(arm.tn, x, hi) + arm.tol) fail.note(std::string(arm.name) + " monotonicity");
      if (tconorm(arm.tc, x, lo) > tconorm(arm.tc, x, hi) + arm.tol) fail.note(std::string(arm.name) + " monotonicity");
    }
  }
  detail = fail ? std::to_string(fail.count) + " violations, first: " + fail.first
                : "100000 checks, 0 violations";
  return !fail;
}

// ---------------------------------------------------------------------------
// 2. One-hot reproduction of the four product-logic operators at 1e-15.
bool criterion2(std::string& detail) {
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = uniform01(rng), y = uniform01(rng);
    const double xy = x * y;
    const double corner[4] = {xy, x + y - xy, x - xy, y - xy};
    for (int c = 0; c < 4; ++c) {
      const double err =
          std::abs(unified_boolean(BarycentricWeights::one_hot(c), x, y) - corner[c]);
      worst = std::max(worst, err);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max abs error %.3g over 10000 samples x 4 corners", worst);
  detail = buf;
  return worst <= 1e-15;
}

// ---------------------------------------------------------------------------
// 3. De Morgan duality for the product triple at 1e-15.
bool criterion3(std::string& detail) {
  Rng rng(303);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = uniform01(rng), y = uniform01(rng);
    const double lhs = 1.0 - tconorm(TConormKind::probabilistic_sum(), x, y);
    const double rhs = tnorm(TNormKind::product(), 1.0 - x, 1.0 - y);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max abs error %.3g over 10000 samples", worst);
  detail = buf;
  return worst <= 1e-15;
}

// ---------------------------------------------------------------------------
// 4. Midpoint linearity along 1000 random weight segments at 1e-12, plus a
//    dense-sampling search that must find a non-monotone bilinear path.
bool criterion4(std::string& detail) {
  Rng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform01(rng), y = uniform01(rng);
    double a[4], b[4], sa = 0.0, sb = 0.0;
    for (double& v : a) sa += v = uniform01(rng) + 1e-3;
    for (double& v : b) sb += v = uniform01(rng) + 1e-3;
    for (double& v : a) v /= sa;
    for (double& v : b) v /= sb;
    const double fa = unified_boolean(BarycentricWeights(a[0], a[1], a[2], a[3]), x, y);
    const double fb = unified_boolean(BarycentricWeights(b[0], b[1], b[2], b[3]), x, y);
    const double fm = unified_boolean(
        BarycentricWeights(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2]),
                           0.5 * (a[3] + b[3])),
        x, y);
    worst = std::max(worst, std::abs(fm - 0.5 * (fa + fb)));
  }
  if (worst > 1e-12) {
    detail = "midpoint linearity violated, max deviation " + std::to_string(worst);
    return false;
  }

  // straight paths between control-square corners, dense (x, y) sampling
  const double corners[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  bool witness = false;
  double wx = 0, wy = 0;
  int wa = -1, wb = -1;
  for (int a2 = 0; a2 < 4 && !witness; ++a2) {
    for (int b2 = 0; b2 < 4 && !witness; ++b2) {
      if (a2 == b2) continue;
      for (int xi = 1; xi < 20 && !witness; ++xi) {
        for (int yi = 1; yi < 20 && !witness; ++yi) {
          const double x = xi / 20.0, y = yi / 20.0;
          double prev = 0.0;
          bool rose = false, fell = false;
          for (int s = 0; s <= 100; ++s) {
            const double lam = s / 100.0;
            const double u = corners[a2][0] + lam * (corners[b2][0] - corners[a2][0]);
            const double v = corners[a2][1] + lam * (corners[b2][1] - corners[a2][1]);
            const double f = bilinear_boolean(u, v, x, y);
            if (s > 0) {
              const double d = f - prev;
              if (d > 1e-9) rose = true;
              if (rose && d < -1e-9) fell = true;
            }
            prev = f;
          }
          if (rose && fell) {
            witness = true;
            wx = x;
            wy = y;
            wa = a2;
            wb = b2;
          }
        }
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "midpoint max dev %.3g; bilinear witness %s (x=%.2f y=%.2f corner %d->%d)",
                worst, witness ? "found" : "NOT FOUND", wx, wy, wa, wb);
  detail = buf;
  return witness;
}

// ---------------------------------------------------------------------------
// 5. Gradient oracle: finite_diff_check < 1e-4 on 50 random trees of depth
//    <= 4 with 64 points each.
bool criterion5(std::string& detail) {
  Rng rng(505);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int depth = 1 + static_cast<int>(uniform_index(rng, 4));
    const PrimitiveKind kind = trial % 3 == 0 ? PrimitiveKind::Sphere
                               : trial % 3 == 1 ? PrimitiveKind::Plane
                                                : PrimitiveKind::Quadric;
    const int dim = trial % 2 == 0 ? 2 : 3;
    const CsgTree tree = build_full_tree(depth, kind, dim, rng);
    std::vector<Point> pts;
    std::vector<double> target;
    for (int i = 0; i < 64; ++i) {
      Point p;
      p.dim = dim;
      for (int k = 0; k < dim; ++k) {
        p.c[static_cast<std::size_t>(k)] = uniform_range(rng, -1.0, 1.0);
      }
      pts.push_back(p);
      target.push_back(uniform01(rng));
    }
    const ParamLayout layout = ParamLayout::build(tree);
    const FiniteDiffReport rep = finite_diff_check(tree, pts, target, 1e-5, layout);
    worst = std::max(worst, rep.max_rel_error);
    if (rep.max_rel_error >= 1e-4) ++failures;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst relative error %.3g over 50 trees (%d over limit)",
                worst, failures);
  detail = buf;
  return failures == 0;
}

// ---------------------------------------------------------------------------
// 6. Vanishing-gradient experiment: Godel-max freezes a strictly dominated
//    subtree exactly; the product-logic union fit reaches held-out MSE <
//    1e-3 within 5000 iterations on >= 8 of 10 seeds.
bool criterion6(std::string& detail) {
  // (a) exact zero gradients under domination
  {
    std::vector<CsgNode> nodes;
    nodes.push_back(circle_leaf(0.0, 0.0, 0.6, 3.0));
    nodes.push_back(circle_leaf(0.05, 0.0, 0.15, 3.0));  // occluded
    CsgNode root;
    root.mode = BooleanMode::FixedGodel;
    root.op = FixedOp::Union;
    root.left = 0;
    root.right = 1;
    nodes.push_back(root);
    const CsgTree tree(std::move(nodes), 2);
    Rng rng(606);
    std::vector<Point> pts;
    std::vector<double> target;
    for (int i = 0; i < 512; ++i) {
      pts.push_back(Point::xy(uniform_range(rng, -1, 1), uniform_range(rng, -1, 1)));
      target.push_back(uniform01(rng));
    }
    for (const Point& p : pts) {
      if (!(occupancy(tree.node(0).prim, p) > occupancy(tree.node(1).prim, p))) {
        detail = "domination construction failed";
        return false;
      }
    }
    const ParamLayout layout = ParamLayout::build(tree, false);
    const BackwardResult r = forward_backward(tree, pts, target, layout);
    const auto right = layout.slice_for(1);
    for (int i = 0; i < right->count; ++i) {
      if (r.grads[static_cast<std::size_t>(right->offset + i)] != 0.0) {
        detail = "occluded subtree received nonzero gradient under Godel max";
        return false;
      }
    }
  }

  // (b) product-logic union recovers the two-circle target from random
  // primitive inits (one often occluded), 10 seeds
  const TargetOracle target = builtin_target("two-circles", false);
  int successes = 0;
  double worst_mse = 0.0;
  for (unsigned long long seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    std::vector<CsgNode> nodes;
    for (int leaf = 0; leaf < 2; ++leaf) {
      CsgNode n;
      n.leaf = true;
      n.prim = init_primitive(rng, PrimitiveKind::Sphere, 2);
      // Right-side-out leaves: a negative-sharpness start flips the sphere
      // into a background plate and strands the fit in an inverted optimum.
      auto& sp = std::get<SpherePrimitive>(n.prim);
      sp.sharpness = 1.0 + std::abs(sp.sharpness);
      nodes.push_back(n);
    }
    CsgNode root;
    root.control = one_hot_control(1);  // pinned to the union corner
    root.left = 0;
    root.right = 1;
    nodes.push_back(root);
    CsgTree init(std::move(nodes), 2);

    FitConfig cfg;
    cfg.iterations = 5000;
    cfg.sampler.batch_size = 1024;
    cfg.mode = FitMode::Unified;
    cfg.seed = 1000 + seed;
    cfg.adam.lr = 1e-2;
    const FitResult result = fit(std::move(init), target, cfg);
    Rng heldout(9000 + seed);
    const double mse = heldout_mse(result.tree, target, 20000, heldout);
    worst_mse = std::max(worst_mse, mse);
    if (!result.aborted && mse < 1e-3) ++successes;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "zero-grad check ok; %d/10 seeds below 1e-3 (worst %.3g)",
                successes, worst_mse);
  detail = buf;
  return successes >= 8;
}

// ---------------------------------------------------------------------------
// Shared state between criteria 7 and 8: the best fitted tree.
struct InverseCsgRun {
  bool done = false;
  std::vector<double> unified_mse;
  std::vector<double> godel_mse;
  CsgTree best_tree{std::vector<CsgNode>{[] {
                      CsgNode n;
                      n.leaf = true;
                      n.prim = ConstantPrimitive{};
                      ConstantPrimitive c;
                      c.dim = 2;
                      n.prim = c;
                      return n;
                    }()},
                    2};
  double best_mse = 1e30;
};

InverseCsgRun& inverse_run() {
  static InverseCsgRun run;
  return run;
}

void run_inverse_csg() {
  InverseCsgRun& run = inverse_run();
  if (run.done) return;
  const TargetOracle target = builtin_target("quadrics8", true);
  for (unsigned long long seed = 0; seed < 10; ++seed) {
    for (const FitMode mode : {FitMode::Unified, FitMode::FixedGodel}) {
      FitConfig cfg;
      cfg.iterations = 5000;
      cfg.sampler.batch_size = 1024;
      cfg.mode = mode;
      cfg.seed = 100 + seed;
      cfg.adam.lr = 1e-2;
      Rng rng(cfg.seed);
      CsgTree init = build_full_tree(4, PrimitiveKind::Quadric, 2, rng);
      const FitResult result = fit(std::move(init), target, cfg);
      Rng heldout(7700 + seed);
      const double mse = heldout_mse(result.tree, target, 200000, heldout);
      if (mode == FitMode::Unified) {
        run.unified_mse.push_back(mse);
        if (mse < run.best_mse) {
          run.best_mse = mse;
          run.best_tree = result.tree;
        }
      } else {
        run.godel_mse.push_back(mse);
      }
      std::fprintf(stderr, "  inverse-csg seed %llu %s mse %.5g\n", cfg.seed,
                   fit_mode_name(mode).c_str(), mse);
    }
  }
  run.done = true;
}

// 7. Desk-scale inverse CSG on the 8-quadric target: unified-mode MSE on
//    2e5 held-out points < 1e-2, and unified <= fixed-godel on >= 8/10
//    shared seeds.
bool criterion7(std::string& detail) {
  run_inverse_csg();
  const InverseCsgRun& run = inverse_run();
  int below = 0, wins = 0;
  for (std::size_t i = 0; i < run.unified_mse.size(); ++i) {
    if (run.unified_mse[i] < 1e-2) ++below;
    if (run.unified_mse[i] <= run.godel_mse[i]) ++wins;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "unified < 1e-2 on %d/10 seeds (best %.3g); unified <= godel on %d/10", below,
                run.best_mse, wins);
  detail = buf;
  return run.best_mse < 1e-2 && below >= 8 && wins >= 8;
}

// 8. Pruning the best fitted tree at threshold 1e-3: strict node-count
//    decrease, held-out MSE change < 5e-3, idempotent.
bool criterion8(std::string& detail) {
  run_inverse_csg();
  const InverseCsgRun& run = inverse_run();
  const TargetOracle target = builtin_target("quadrics8", true);

  PruneConfig cfg;
  SamplerConfig sampler;
  sampler.batch_size = 200000;
  Rng rng(808);
  cfg.eval_points = sample_points(target, sampler, rng).points;

  PruneReport report;
  const CsgTree pruned = prune(run.best_tree, cfg, &report);
  const auto [pb, bb] = run.best_tree.node_count();
  const auto [pa, ba] = pruned.node_count();
  const bool decreased = pa + ba < pb + bb;

  Rng heldout(818);
  const double mse_before = heldout_mse(run.best_tree, target, 200000, heldout);
  Rng heldout2(818);
  const double mse_after = heldout_mse(pruned, target, 200000, heldout2);
  const double change = std::abs(mse_after - mse_before);

  PruneReport again;
  const CsgTree twice = prune(pruned, cfg, &again);
  const bool idempotent = twice.node_count() == pruned.node_count() && again.deletions.empty();

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "nodes %d -> %d, held-out MSE change %.3g, idempotent %s", pb + bb, pa + ba,
                change, idempotent ? "yes" : "no");
  detail = buf;
  return decreased && change < 5e-3 && idempotent;
}

// ---------------------------------------------------------------------------
// 9. Stack-evaluation equivalence on 100 random trees (including pruned
//    irregular ones) with single-visit counters.
bool criterion9(std::string& detail) {
  Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int depth = 1 + static_cast<int>(uniform_index(rng, 4));
    CsgTree tree = build_full_tree(depth, PrimitiveKind::Quadric, 2, rng);
    if (trial % 3 == 0 && tree.size() > 3) {
      // exercise the irregular path: prune at a loose threshold
      PruneConfig cfg;
      cfg.threshold = 0.05;
      for (int i = 0; i < 500; ++i) {
        cfg.eval_points.push_back(
            Point::xy(uniform_range(rng, -1, 1), uniform_range(rng, -1, 1)));
      }
      tree = prune(tree, cfg, nullptr);
    }
    std::vector<Point> pts;
    for (int i = 0; i < 50; ++i) {
      pts.push_back(Point::xy(uniform_range(rng, -1, 1), uniform_range(rng, -1, 1)));
    }
    const std::vector<double> batch = eval(tree, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t visits = 0;
      const double v = eval_stack(tree, pts[i], {}, &visits);
      worst = std::max(worst, std::abs(v - batch[i]));
      if (visits != static_cast<std::size_t>(tree.size())) {
        detail = "node visit counter mismatch";
        return false;
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |eval_stack - eval| = %.3g over 100 trees", worst);
  detail = buf;
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 10. Crisp-limit equivalence against a brute-force set oracle on a 256^2
//     grid, exact match required.
bool criterion10(std::string& detail) {
  const auto tree = builtin_target_tree("quadrics8");

  // brute-force set semantics: recursive boolean algebra over leaf
  // inside/outside tests
  std::function<bool(int, const Point&)> inside = [&](int id, const Point& p) -> bool {
    const CsgNode& n = tree->node(id);
    if (n.leaf) {
      const double s = std::visit(
          [](const auto& pr) {
            if constexpr (std::is_same_v<std::decay_t<decltype(pr)>, ConstantPrimitive>) {
              return 0.0;
            } else {
              return pr.sharpness;
            }
          },
          n.prim);
      if (const auto* c = std::get_if<ConstantPrimitive>(&n.prim)) return c->value > 0.5;
      return s * field(n.prim, p) > 0.0;
    }
    const bool x = inside(n.left, p);
    const bool y = inside(n.right, p);
    const BarycentricWeights w =
        control_to_barycentric(n.control, tree->omega(), tree->temperature());
    int corner = 0;
    for (int i = 1; i < 4; ++i) {
      if (w[i] > w[corner]) corner = i;
    }
    switch (corner) {
      case 0: return x && y;
      case 1: return x || y;
      case 2: return x && !y;
      default: return y && !x;
    }
  };

  EvalOptions crisp;
  crisp.crisp = true;
  long mismatches = 0;
  for (int i = 0; i < 256; ++i) {
    for (int j = 0; j < 256; ++j) {
      const Point p = Point::xy(-1.0 + (i + 0.5) / 128.0, -1.0 + (j + 0.5) / 128.0);
      const double v = eval_stack(*tree, p, crisp);
      const bool oracle = inside(tree->root(), p);
      if (v != (oracle ? 1.0 : 0.0)) ++mismatches;
    }
  }
  detail = std::to_string(mismatches) + " mismatches over 65536 grid cells";
  return mismatches == 0;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int number;
    const char* title;
    bool (*fn)(std::string&);
  };
  const std::vector<Criterion> criteria{
      {1, "fuzzy axiom suite", criterion1},
      {2, "one-hot operator reproduction", criterion2},
      {3, "De Morgan duality", criterion3},
      {4, "barycentric linearity vs bilinear counterexample", criterion4},
      {5, "finite-difference gradient oracle", criterion5},
      {6, "vanishing-gradient experiment", criterion6},
      {7, "desk-scale inverse CSG", criterion7},
      {8, "pruning", criterion8},
      {9, "stack-evaluation equivalence", criterion9},
      {10, "crisp-limit equivalence", criterion10},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    const bool ok = c.fn(detail);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d [%s] %s: %s (%.1fs)\n", c.number, ok ? "pass" : "FAIL",
                c.title, detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  if (failed > 0) {
    std::printf("%d criterion(s) failed\n", failed);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
