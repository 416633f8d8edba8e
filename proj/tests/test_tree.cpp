#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "fcsg/autodiff.hpp"
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

}  // namespace

TEST_CASE("control_to_barycentric frozen values") {
  BooleanControl equal;
  equal.c_raw = {0.2, 0.2, 0.2, 0.2};
  const BarycentricWeights w = control_to_barycentric(equal, 10.0, 1e3);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.25).epsilon(1e-12));

  const BarycentricWeights oh = control_to_barycentric(one_hot_control(2), 10.0, 1e3);
  CHECK(oh[2] > 1.0 - 1e-15);

  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    BooleanControl c;
    for (double& v : c.c_raw) v = uniform_range(rng, -5.0, 5.0);
    const BarycentricWeights r = control_to_barycentric(c, 10.0, 1e3);
    CHECK(std::abs(r[0] + r[1] + r[2] + r[3] - 1.0) <= 1e-9);
  }

  BooleanControl bad;
  bad.c_raw[0] = std::nan("");
  CHECK_THROWS_AS(control_to_barycentric(bad, 10.0, 1e3), ParameterError);
}

TEST_CASE("build_full_tree structure and determinism") {
  Rng rng(3);
  const CsgTree t1 = build_full_tree(1, PrimitiveKind::Quadric, 2, rng);
  CHECK(t1.node_count() == std::pair<int, int>{2, 1});

  Rng rng7(3);
  const CsgTree t7 = build_full_tree(7, PrimitiveKind::Sphere, 3, rng7);
  CHECK(t7.node_count() == std::pair<int, int>{128, 127});
  CHECK(t7.height() == 8);

  Rng a(5), b(5);
  const CsgTree ta = build_full_tree(3, PrimitiveKind::Quadric, 2, a);
  const CsgTree tb = build_full_tree(3, PrimitiveKind::Quadric, 2, b);
  const ParamLayout layout = ParamLayout::build(ta);
  CHECK(layout.gather(ta) == ParamLayout::build(tb).gather(tb));

  CHECK_THROWS_AS(build_full_tree(0, PrimitiveKind::Quadric, 2, rng), ParameterError);
  CHECK_THROWS_AS(build_full_tree(23, PrimitiveKind::Quadric, 2, rng), ResourceError);
}

TEST_CASE("tree constructor validates structure") {
  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(0, 0, 0.5, 2.0));
  CsgNode b;
  b.left = 0;
  b.right = 0;  // duplicate child
  nodes.push_back(b);
  CHECK_THROWS_AS(CsgTree(std::move(nodes), 2), ParameterError);

  std::vector<CsgNode> fwd;
  CsgNode b2;
  b2.left = 1;
  b2.right = 2;  // forward references violate post-order
  fwd.push_back(b2);
  fwd.push_back(circle_leaf(0, 0, 0.5, 2.0));
  fwd.push_back(circle_leaf(0, 0, 0.5, 2.0));
  CHECK_THROWS_AS(CsgTree(std::move(fwd), 2), ParameterError);
}

TEST_CASE("single leaf eval equals primitive occupancy, empty batch is empty") {
  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(0.1, -0.2, 0.4, 3.0));
  const CsgTree tree(std::move(nodes), 2);
  const std::vector<Point> pts{Point::xy(0.1, -0.2), Point::xy(0.9, 0.9)};
  const std::vector<double> out = eval(tree, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(out[i] == doctest::Approx(occupancy(tree.node(0).prim, pts[i])).epsilon(1e-15));
  }
  CHECK(eval(tree, std::vector<Point>{}).empty());
  CHECK(eval_stack(tree, pts[0]) == doctest::Approx(out[0]).epsilon(1e-15));
}

TEST_CASE("one-hot union matches the closed form") {
  std::vector<CsgNode> nodes;
  nodes.push_back(circle_leaf(-0.4, 0.0, 0.35, 4.0));
  nodes.push_back(circle_leaf(0.4, 0.0, 0.35, 4.0));
  CsgNode u;
  u.control = one_hot_control(1);
  u.left = 0;
  u.right = 1;
  nodes.push_back(u);
  const CsgTree tree(std::move(nodes), 2);

  const Point p = Point::xy(-0.4, 0.0);  // well inside the left circle only
  const double x = occupancy(tree.node(0).prim, p);
  const double y = occupancy(tree.node(1).prim, p);
  CHECK(eval_stack(tree, p) == doctest::Approx(x + y - x * y).epsilon(1e-12));
}

TEST_CASE("eval and eval_stack agree with single-visit counters") {
  Rng rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const int depth = 1 + static_cast<int>(uniform_index(rng, 4));
    const CsgTree tree = build_full_tree(depth, PrimitiveKind::Quadric, 2, rng);
    std::vector<Point> pts;
    for (int i = 0; i < 20; ++i) {
      pts.push_back(Point::xy(uniform_range(rng, -1, 1), uniform_range(rng, -1, 1)));
    }
    const std::vector<double> batch = eval(tree, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t visits = 0;
      const double v = eval_stack(tree, pts[i], {}, &visits);
      CHECK(std::abs(v - batch[i]) <= 1e-12);
      CHECK(visits == static_cast<std::size_t>(tree.size()));
    }
  }
}

TEST_CASE("eval rejects dimension mismatches") {
  Rng rng(2);
  const CsgTree tree = build_full_tree(2, PrimitiveKind::Quadric, 2, rng);
  const std::vector<Point> pts{Point::xyz(0, 0, 0)};
  CHECK_THROWS_AS(eval(tree, pts), ShapeError);
  CHECK_THROWS_AS(eval_stack(tree, Point::xyz(0, 0, 0)), ShapeError);
}

TEST_CASE("serialization round-trips bit-exactly") {
  Rng rng(31);
  for (PrimitiveKind kind : {PrimitiveKind::Quadric, PrimitiveKind::Sphere}) {
    const CsgTree tree = build_full_tree(3, kind, 3, rng);
    const std::string doc = serialize(tree);
    const CsgTree back = deserialize(doc);
    const ParamLayout layout = ParamLayout::build(tree);
    CHECK(layout.gather(tree) == ParamLayout::build(back).gather(back));
    CHECK(serialize(back) == doc);
  }
}

TEST_CASE("deserialize error paths") {
  using nlohmann::json;
  Rng rng(8);
  const CsgTree tree = build_full_tree(1, PrimitiveKind::Sphere, 2, rng);
  json doc = json::parse(serialize(tree));

  json missing_child = doc;
  missing_child["nodes"][2].erase("children");
  try {
    deserialize(missing_child.dump());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("node 2") != std::string::npos);
  }

  json unknown_kind = doc;
  unknown_kind["nodes"][0]["kind"] = "torus";
  CHECK_THROWS_AS(deserialize(unknown_kind.dump()), SchemaError);

  json bad_version = doc;
  bad_version["version"] = 99;
  try {
    deserialize(bad_version.dump());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  CHECK_THROWS_AS(deserialize("{not json"), ParseError);
}

TEST_CASE("crisp evaluation reproduces classic set semantics per operator") {
  // One boolean over two constant-like crisp leaves, checked against the
  // truth table of each set operation.
  const auto crisp_leaf = [](bool inside) {
    QuadricPrimitive q;
    q.dim = 2;
    q.q[9] = inside ? 1.0 : -1.0;
    q.sharpness = 1.0;
    CsgNode n;
    n.leaf = true;
    n.prim = q;
    return n;
  };
  const auto expect = [](int corner, bool x, bool y) {
    switch (corner) {
      case 0: return x && y;
      case 1: return x || y;
      case 2: return x && !y;
      default: return y && !x;
    }
  };
  for (int corner = 0; corner < 4; ++corner) {
    for (int xb = 0; xb < 2; ++xb) {
      for (int yb = 0; yb < 2; ++yb) {
        std::vector<CsgNode> nodes;
        nodes.push_back(crisp_leaf(xb == 1));
        nodes.push_back(crisp_leaf(yb == 1));
        CsgNode b;
        b.control = one_hot_control(corner);
        b.left = 0;
        b.right = 1;
        nodes.push_back(b);
        const CsgTree tree(std::move(nodes), 2);
        EvalOptions crisp;
        crisp.crisp = true;
        const double v = eval_stack(tree, Point::xy(0.3, 0.3), crisp);
        CHECK(v == (expect(corner, xb == 1, yb == 1) ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("builtin target trees are well-formed") {
  for (const char* name : {"two-circles", "quad4", "quadrics8", "blob"}) {
    const auto tree = builtin_target_tree(name);
    CHECK(tree->dim() == 2);
    const double v = eval_stack(*tree, Point::xy(0.0, 0.0));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(builtin_target_tree("nope"), ParameterError);
}
