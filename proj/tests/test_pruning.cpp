#include <cmath>
#include <vector>

#include <doctest.h>

#include "fcsg/autodiff.hpp"
#include "fcsg/pruning.hpp"

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

CsgNode constant_leaf(double value) {
  ConstantPrimitive c;
  c.value = value;
  c.dim = 2;
  CsgNode n;
  n.leaf = true;
  n.prim = c;
  return n;
}

std::vector<Point> grid_points() {
  std::vector<Point> pts;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      pts.push_back(Point::xy(-1.0 + (i + 0.5) / 20.0, -1.0 + (j + 0.5) / 20.0));
    }
  }
  return pts;
}

}  // namespace

TEST_CASE("redundancy verdicts at the boundary conditions") {
  PruneConfig cfg;
  cfg.eval_points = grid_points();

  // intersection with a full right child: right child is W-redundant
  std::vector<CsgNode> inter;
  inter.push_back(circle_leaf(0.0, 0.0, 0.5, 4.0));
  inter.push_back(constant_leaf(1.0));
  CsgNode bi;
  bi.control = one_hot_control(0);
  bi.left = 0;
  bi.right = 1;
  inter.push_back(bi);
  const CsgTree ti(std::move(inter), 2);
  CHECK(subtree_redundancy(ti, 1, cfg) == RedundancyVerdict::WRedundant);

  // union with an empty right child: right child is empty-redundant
  std::vector<CsgNode> uni;
  uni.push_back(circle_leaf(0.0, 0.0, 0.5, 4.0));
  uni.push_back(constant_leaf(0.0));
  CsgNode bu;
  bu.control = one_hot_control(1);
  bu.left = 0;
  bu.right = 1;
  uni.push_back(bu);
  const CsgTree tu(std::move(uni), 2);
  CHECK(subtree_redundancy(tu, 1, cfg) == RedundancyVerdict::EmptyRedundant);

  // union with a flat 0.5 occupancy child actually matters
  std::vector<CsgNode> mid;
  mid.push_back(circle_leaf(0.0, 0.0, 0.5, 50.0));
  QuadricPrimitive flat;
  flat.dim = 2;
  flat.sharpness = 0.0;
  CsgNode fl;
  fl.leaf = true;
  fl.prim = flat;
  mid.push_back(fl);
  CsgNode bm;
  bm.control = one_hot_control(1);
  bm.left = 0;
  bm.right = 1;
  mid.push_back(bm);
  const CsgTree tm(std::move(mid), 2);
  CHECK(subtree_redundancy(tm, 1, cfg) == RedundancyVerdict::NotRedundant);

  CHECK_THROWS_AS(subtree_redundancy(ti, 2, cfg), ParameterError);  // root not allowed
  PruneConfig bad;
  CHECK_THROWS_AS(subtree_redundancy(ti, 0, bad), ParameterError);  // empty eval points
}

TEST_CASE("prune collapses boundary-condition constants") {
  PruneConfig cfg;
  cfg.eval_points = grid_points();

  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(0.0, 0.0, 0.5, 4.0));
  nodes.push_back(constant_leaf(1.0));
  CsgNode b;
  b.control = one_hot_control(0);
  b.left = 0;
  b.right = 1;
  nodes.push_back(b);
  const CsgTree tree(std::move(nodes), 2);

  PruneReport report;
  const CsgTree pruned = prune(tree, cfg, &report);
  CHECK(pruned.node_count() == std::pair<int, int>{1, 0});
  CHECK(report.mse_change < 1e-9);

  // the collapse is exact: pruned tree is the surviving circle
  for (const Point& p : cfg.eval_points) {
    CHECK(eval_stack(pruned, p) ==
          doctest::Approx(eval_stack(tree, p)).epsilon(1e-12));
  }
}

TEST_CASE("prune leaves irredundant trees unchanged and is idempotent") {
  PruneConfig cfg;
  cfg.eval_points = grid_points();

  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(-0.4, 0.0, 0.35, 6.0));
  nodes.push_back(circle_leaf(0.4, 0.0, 0.35, 6.0));
  CsgNode b;
  b.control = one_hot_control(1);
  b.left = 0;
  b.right = 1;
  nodes.push_back(b);
  const CsgTree tree(std::move(nodes), 2);

  PruneReport report;
  const CsgTree pruned = prune(tree, cfg, &report);
  CHECK(report.deletions.empty());
  CHECK(pruned.node_count() == tree.node_count());

  PruneReport again;
  const CsgTree twice = prune(pruned, cfg, &again);
  CHECK(again.deletions.empty());
  CHECK(twice.node_count() == pruned.node_count());
}

TEST_CASE("chained redundancy collapses across levels") {
  PruneConfig cfg;
  cfg.eval_points = grid_points();

  // ((circle ∩ 1) ∩ 1): two nested W-redundant constants
  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(0.0, 0.0, 0.5, 4.0));  // 0
  nodes.push_back(constant_leaf(1.0));               // 1
  CsgNode b1;
  b1.control = one_hot_control(0);
  b1.left = 0;
  b1.right = 1;
  nodes.push_back(b1);                 // 2
  nodes.push_back(constant_leaf(1.0)); // 3
  CsgNode b2;
  b2.control = one_hot_control(0);
  b2.left = 2;
  b2.right = 3;
  nodes.push_back(b2);  // 4
  const CsgTree tree(std::move(nodes), 2);

  const CsgTree pruned = prune(tree, cfg, nullptr);
  CHECK(pruned.node_count() == std::pair<int, int>{1, 0});
}

TEST_CASE("occluded subtree under a crisp union is empty-redundant") {
  PruneConfig cfg;
  cfg.eval_points = grid_points();

  // small circle entirely inside a big sharp one, crisp-ish occupancies
  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(0.0, 0.0, 0.7, 80.0));
  nodes.push_back(circle_leaf(0.1, 0.0, 0.2, 80.0));
  CsgNode b;
  b.control = one_hot_control(1);
  b.left = 0;
  b.right = 1;
  nodes.push_back(b);
  const CsgTree tree(std::move(nodes), 2);

  PruneReport report;
  const CsgTree pruned = prune(tree, cfg, &report);
  CHECK(pruned.node_count() == std::pair<int, int>{1, 0});
  CHECK_FALSE(report.deletions.empty());
  CHECK(report.mse_change < 5e-3);

  // pruned irregular trees stay consistent between the two evaluators
  for (int i = 0; i < 50; ++i) {
    const Point p = cfg.eval_points[static_cast<std::size_t>(i * 31)];
    std::size_t visits = 0;
    CHECK(std::abs(eval_stack(pruned, p, {}, &visits) -
                   eval(pruned, std::vector<Point>{p})[0]) <= 1e-12);
    CHECK(visits == static_cast<std::size_t>(pruned.size()));
  }
}

TEST_CASE("prune report serializes with verdict names") {
  PruneReport report;
  report.prims_before = 4;
  report.bools_before = 3;
  report.prims_after = 2;
  report.bools_after = 1;
  report.deletions.push_back({2, RedundancyVerdict::WRedundant});
  const std::string doc = prune_report_json(report);
  CHECK(doc.find("w-redundant") != std::string::npos);
  CHECK(doc.find("\"primitives_before\": 4") != std::string::npos);
}
