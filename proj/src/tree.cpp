#include "fcsg/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include <json.hpp>

namespace fcsg {

namespace {

using nlohmann::json;

double crisp_leaf_occupancy(const Primitive& prim, const Point& p) {
  if (const auto* c = std::get_if<ConstantPrimitive>(&prim)) return c->value;
  const double s = std::visit(
      [](const auto& pr) {
        if constexpr (std::is_same_v<std::decay_t<decltype(pr)>, ConstantPrimitive>) {
          return 0.0;
        } else {
          return pr.sharpness;
        }
      },
      prim);
  return s * field(prim, p) > 0.0 ? 1.0 : 0.0;
}

int argmax4(const std::array<double, 4>& a) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (a[static_cast<std::size_t>(i)] > a[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

double fixed_product_op(FixedOp op, double x, double y) {
  switch (op) {
    case FixedOp::Intersection:
      return x * y;
    case FixedOp::Union:
      return x + y - x * y;
    case FixedOp::DiffLeftRight:
      return x - x * y;
    case FixedOp::DiffRightLeft:
      return y - x * y;
  }
  throw ParameterError("unknown fixed op");
}

double fixed_godel_op(FixedOp op, double x, double y) {
  switch (op) {
    case FixedOp::Intersection:
      return std::min(x, y);
    case FixedOp::Union:
      return std::max(x, y);
    case FixedOp::DiffLeftRight:
      return std::min(x, 1.0 - y);
    case FixedOp::DiffRightLeft:
      return std::min(y, 1.0 - x);
  }
  throw ParameterError("unknown fixed op");
}

}  // namespace

CsgTree::CsgTree(std::vector<CsgNode> postorder_nodes, int dim, double omega,
                 double temperature)
    : nodes_(std::move(postorder_nodes)), dim_(dim), omega_(omega), temperature_(temperature) {
  if (nodes_.empty()) throw ParameterError("tree must have at least one node");
  if (dim_ != 2 && dim_ != 3) throw ParameterError("tree dimension must be 2 or 3");
  if (!(omega_ > 0.0)) throw ParameterError("omega must be > 0");
  if (!(temperature_ > 0.0)) throw ParameterError("temperature must be > 0");

  std::vector<int> referenced(nodes_.size(), 0);
  for (int i = 0; i < size(); ++i) {
    const CsgNode& n = nodes_[static_cast<std::size_t>(i)];
    if (n.leaf) {
      if (primitive_dim(n.prim) != dim_) {
        throw ParameterError("leaf " + std::to_string(i) + " dimension mismatch");
      }
    } else {
      if (n.left < 0 || n.right < 0 || n.left >= i || n.right >= i || n.left == n.right) {
        throw ParameterError("boolean node " + std::to_string(i) +
                             " has invalid children (post-order required)");
      }
      ++referenced[static_cast<std::size_t>(n.left)];
      ++referenced[static_cast<std::size_t>(n.right)];
    }
  }
  for (int i = 0; i < size(); ++i) {
    const int expected = (i == root()) ? 0 : 1;
    if (referenced[static_cast<std::size_t>(i)] != expected) {
      throw ParameterError("node " + std::to_string(i) + " is referenced " +
                           std::to_string(referenced[static_cast<std::size_t>(i)]) +
                           " times");
    }
  }
}

std::pair<int, int> CsgTree::node_count() const {
  int prims = 0, bools = 0;
  for (const CsgNode& n : nodes_) {
    if (n.leaf) {
      ++prims;
    } else {
      ++bools;
    }
  }
  return {prims, bools};
}

int CsgTree::height() const {
  std::vector<int> h(nodes_.size(), 1);
  for (int i = 0; i < size(); ++i) {
    const CsgNode& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.leaf) {
      h[static_cast<std::size_t>(i)] =
          1 + std::max(h[static_cast<std::size_t>(n.left)], h[static_cast<std::size_t>(n.right)]);
    }
  }
  return h.back();
}

BarycentricWeights control_to_barycentric(const BooleanControl& ctrl, double omega,
                                          double temperature) {
  std::array<double, 4> a;
  for (int i = 0; i < 4; ++i) {
    const double ci = ctrl.c_raw[static_cast<std::size_t>(i)];
    if (!std::isfinite(ci)) throw ParameterError("non-finite boolean control");
    a[static_cast<std::size_t>(i)] = std::sin(omega * ci) * temperature;
  }
  const double shift = *std::max_element(a.begin(), a.end());
  std::array<double, 4> e;
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    e[static_cast<std::size_t>(i)] = std::exp(a[static_cast<std::size_t>(i)] - shift);
    sum += e[static_cast<std::size_t>(i)];
  }
  return BarycentricWeights(e[0] / sum, e[1] / sum, e[2] / sum, e[3] / sum);
}

CsgTree build_full_tree(int depth, PrimitiveKind kind, int dim, Rng& rng, double omega,
                        double temperature) {
  if (depth < 1) throw ParameterError("tree depth must be >= 1");
  if (depth > 22) {
    throw ResourceError("tree depth " + std::to_string(depth) + " exceeds memory budget");
  }
  std::vector<CsgNode> nodes;
  nodes.reserve((std::size_t{2} << depth) - 1);

  std::function<int(int)> build = [&](int level) -> int {
    if (level == depth) {
      CsgNode leaf;
      leaf.leaf = true;
      leaf.prim = init_primitive(rng, kind, dim);
      nodes.push_back(leaf);
      return static_cast<int>(nodes.size()) - 1;
    }
    const int l = build(level + 1);
    const int r = build(level + 1);
    CsgNode b;
    b.left = l;
    b.right = r;
    for (double& c : b.control.c_raw) c = uniform_pm_half(rng);
    nodes.push_back(b);
    return static_cast<int>(nodes.size()) - 1;
  };
  build(0);
  return CsgTree(std::move(nodes), dim, omega, temperature);
}

double combine_node(const CsgNode& node, const BarycentricWeights* weights, double x,
                    double y, bool crisp) {
  switch (node.mode) {
    case BooleanMode::Unified: {
      if (weights == nullptr) throw ParameterError("unified node needs cached weights");
      if (crisp) {
        static const std::array<FixedOp, 4> kCorner{
            FixedOp::Intersection, FixedOp::Union, FixedOp::DiffLeftRight,
            FixedOp::DiffRightLeft};
        return fixed_product_op(kCorner[static_cast<std::size_t>(argmax4(weights->data()))],
                                x, y);
      }
      return unified_boolean(*weights, x, y);
    }
    case BooleanMode::Bilinear: {
      const double u = sigmoid(node.control.c_raw[0]);
      const double v = sigmoid(node.control.c_raw[1]);
      return bilinear_boolean(u, v, x, y);
    }
    case BooleanMode::FixedProduct:
      return fixed_product_op(node.op, x, y);
    case BooleanMode::FixedGodel:
      return fixed_godel_op(node.op, x, y);
  }
  throw ParameterError("unknown boolean mode");
}

std::vector<const BarycentricWeights*> cache_weights(const CsgTree& tree,
                                                     std::vector<BarycentricWeights>& storage) {
  storage.clear();
  storage.reserve(tree.nodes().size());
  std::vector<int> slot(tree.nodes().size(), -1);
  for (int i = 0; i < tree.size(); ++i) {
    const CsgNode& n = tree.node(i);
    if (!n.leaf && n.mode == BooleanMode::Unified) {
      storage.push_back(control_to_barycentric(n.control, tree.omega(), tree.temperature()));
      slot[static_cast<std::size_t>(i)] = static_cast<int>(storage.size()) - 1;
    }
  }
  std::vector<const BarycentricWeights*> out(tree.nodes().size(), nullptr);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (slot[i] >= 0) out[i] = &storage[static_cast<std::size_t>(slot[i])];
  }
  return out;
}

std::vector<double> eval(const CsgTree& tree, std::span<const Point> points,
                         EvalOptions opts) {
  for (const Point& p : points) {
    if (p.dim != tree.dim()) throw ShapeError("point dimension does not match tree");
  }
  std::vector<BarycentricWeights> storage;
  const auto weights = cache_weights(tree, storage);

  std::function<std::vector<double>(int)> eval_node = [&](int idx) -> std::vector<double> {
    const CsgNode& n = tree.node(idx);
    std::vector<double> out(points.size());
    if (n.leaf) {
      for (std::size_t k = 0; k < points.size(); ++k) {
        out[k] = opts.crisp ? crisp_leaf_occupancy(n.prim, points[k])
                            : occupancy(n.prim, points[k]);
      }
      return out;
    }
    const std::vector<double> lx = eval_node(n.left);
    const std::vector<double> rx = eval_node(n.right);
    for (std::size_t k = 0; k < points.size(); ++k) {
      out[k] = combine_node(n, weights[static_cast<std::size_t>(idx)], lx[k], rx[k],
                            opts.crisp);
    }
    return out;
  };
  return eval_node(tree.root());
}

double eval_stack(const CsgTree& tree, const Point& p, EvalOptions opts,
                  std::size_t* node_visits) {
  if (p.dim != tree.dim()) throw ShapeError("point dimension does not match tree");
  std::vector<BarycentricWeights> storage;
  const auto weights = cache_weights(tree, storage);

  std::vector<double> stack;
  for (int i = 0; i < tree.size(); ++i) {
    const CsgNode& n = tree.node(i);
    if (node_visits != nullptr) ++*node_visits;
    if (n.leaf) {
      stack.push_back(opts.crisp ? crisp_leaf_occupancy(n.prim, p) : occupancy(n.prim, p));
    } else {
      const double y = stack.back();
      stack.pop_back();
      const double x = stack.back();
      stack.pop_back();
      stack.push_back(combine_node(n, weights[static_cast<std::size_t>(i)], x, y, opts.crisp));
    }
  }
  return stack.back();
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const json& j, const std::string& context) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw ParseError("malformed number in " + context + ": '" + s + "'");
    }
    return v;
  }
  if (j.is_number()) return j.get<double>();
  throw ParseError("expected number in " + context);
}

json params_array(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(fmt_double(x));
  return a;
}

const char* mode_name(BooleanMode m) {
  switch (m) {
    case BooleanMode::Unified:
      return "unified";
    case BooleanMode::Bilinear:
      return "bilinear";
    case BooleanMode::FixedProduct:
      return "fixed-product";
    case BooleanMode::FixedGodel:
      return "fixed-godel";
  }
  return "unified";
}

const char* op_name(FixedOp op) {
  switch (op) {
    case FixedOp::Intersection:
      return "intersection";
    case FixedOp::Union:
      return "union";
    case FixedOp::DiffLeftRight:
      return "diff-lr";
    case FixedOp::DiffRightLeft:
      return "diff-rl";
  }
  return "union";
}

BooleanMode parse_mode(const std::string& s, int id) {
  if (s == "unified") return BooleanMode::Unified;
  if (s == "bilinear") return BooleanMode::Bilinear;
  if (s == "fixed-product") return BooleanMode::FixedProduct;
  if (s == "fixed-godel") return BooleanMode::FixedGodel;
  throw SchemaError("boolean node " + std::to_string(id) + ": unknown mode '" + s + "'");
}

FixedOp parse_op(const std::string& s, int id) {
  if (s == "intersection") return FixedOp::Intersection;
  if (s == "union") return FixedOp::Union;
  if (s == "diff-lr") return FixedOp::DiffLeftRight;
  if (s == "diff-rl") return FixedOp::DiffRightLeft;
  throw SchemaError("boolean node " + std::to_string(id) + ": unknown op '" + s + "'");
}

}  // namespace

std::string serialize(const CsgTree& tree) {
  json doc;
  doc["format"] = "fcsg-tree";
  doc["version"] = 1;
  doc["dimension"] = tree.dim();
  doc["omega"] = fmt_double(tree.omega());
  doc["temperature"] = fmt_double(tree.temperature());
  json nodes = json::array();
  for (int i = 0; i < tree.size(); ++i) {
    const CsgNode& n = tree.node(i);
    json jn;
    jn["id"] = i;
    if (!n.leaf) {
      jn["kind"] = "boolean";
      jn["mode"] = mode_name(n.mode);
      if (n.mode == BooleanMode::FixedProduct || n.mode == BooleanMode::FixedGodel) {
        jn["op"] = op_name(n.op);
      }
      jn["c_raw"] = params_array(n.control.c_raw);
      jn["children"] = json::array({n.left, n.right});
    } else if (const auto* q = std::get_if<QuadricPrimitive>(&n.prim)) {
      jn["kind"] = "quadric";
      jn["q"] = params_array(q->q);
      jn["sharpness"] = fmt_double(q->sharpness);
    } else if (const auto* s = std::get_if<SpherePrimitive>(&n.prim)) {
      jn["kind"] = "sphere";
      jn["center"] = params_array(std::span<const double>(s->center.data(), s->dim));
      jn["radius_raw"] = fmt_double(s->radius_raw);
      jn["sharpness"] = fmt_double(s->sharpness);
    } else if (const auto* pl = std::get_if<PlanePrimitive>(&n.prim)) {
      jn["kind"] = "plane";
      jn["normal"] = params_array(std::span<const double>(pl->normal.data(), pl->dim));
      jn["offset"] = fmt_double(pl->offset);
      jn["sharpness"] = fmt_double(pl->sharpness);
    } else if (const auto* c = std::get_if<ConstantPrimitive>(&n.prim)) {
      jn["kind"] = "constant";
      jn["value"] = fmt_double(c->value);
    }
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2);
}

CsgTree deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("tree document is not valid JSON: ") + e.what());
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ParseError("tree document missing version field");
  }
  if (doc["version"].get<int>() != 1) {
    throw ParseError("unsupported tree document version " +
                     std::to_string(doc["version"].get<int>()));
  }
  if (!doc.contains("dimension") || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ParseError("tree document missing dimension or nodes");
  }
  const int dim = doc["dimension"].get<int>();
  const double omega = doc.contains("omega") ? parse_double(doc["omega"], "omega") : 10.0;
  const double temperature =
      doc.contains("temperature") ? parse_double(doc["temperature"], "temperature") : 1e3;

  std::vector<CsgNode> nodes;
  int idx = 0;
  for (const json& jn : doc["nodes"]) {
    const int id = jn.contains("id") ? jn["id"].get<int>() : idx;
    if (id != idx) {
      throw ParseError("node ids must be contiguous post-order indices; got id " +
                       std::to_string(id) + " at position " + std::to_string(idx));
    }
    if (!jn.contains("kind")) throw ParseError("node " + std::to_string(id) + ": missing kind");
    const std::string kind = jn["kind"].get<std::string>();
    CsgNode n;
    const std::string ctx = "node " + std::to_string(id);
    try {
    if (kind == "boolean") {
      if (!jn.contains("children") || !jn["children"].is_array() ||
          jn["children"].size() != 2) {
        throw ParseError("boolean node " + std::to_string(id) + ": missing child");
      }
      n.left = jn["children"][0].get<int>();
      n.right = jn["children"][1].get<int>();
      n.mode = jn.contains("mode") ? parse_mode(jn["mode"].get<std::string>(), id)
                                   : BooleanMode::Unified;
      if (n.mode == BooleanMode::FixedProduct || n.mode == BooleanMode::FixedGodel) {
        if (!jn.contains("op")) {
          throw ParseError("boolean node " + std::to_string(id) + ": fixed mode missing op");
        }
        n.op = parse_op(jn["op"].get<std::string>(), id);
      }
      if (jn.contains("c_raw")) {
        const json& cr = jn["c_raw"];
        for (std::size_t k = 0; k < 4 && k < cr.size(); ++k) {
          n.control.c_raw[k] = parse_double(cr[k], ctx + " c_raw");
        }
      }
    } else if (kind == "quadric") {
      QuadricPrimitive q;
      q.dim = dim;
      const json& qa = jn.at("q");
      if (!qa.is_array() || qa.size() != 10) {
        throw ParseError(ctx + ": quadric needs 10 coefficients");
      }
      for (std::size_t k = 0; k < 10; ++k) q.q[k] = parse_double(qa[k], ctx + " q");
      q.sharpness = parse_double(jn.at("sharpness"), ctx + " sharpness");
      n.leaf = true;
      n.prim = q;
    } else if (kind == "sphere") {
      SpherePrimitive s;
      s.dim = dim;
      const json& ca = jn.at("center");
      if (!ca.is_array() || static_cast<int>(ca.size()) != dim) {
        throw ParseError(ctx + ": sphere center length must equal dimension");
      }
      for (int k = 0; k < dim; ++k) {
        s.center[static_cast<std::size_t>(k)] =
            parse_double(ca[static_cast<std::size_t>(k)], ctx + " center");
      }
      s.radius_raw = parse_double(jn.at("radius_raw"), ctx + " radius_raw");
      s.sharpness = parse_double(jn.at("sharpness"), ctx + " sharpness");
      n.leaf = true;
      n.prim = s;
    } else if (kind == "plane") {
      PlanePrimitive pl;
      pl.dim = dim;
      const json& na = jn.at("normal");
      if (!na.is_array() || static_cast<int>(na.size()) != dim) {
        throw ParseError(ctx + ": plane normal length must equal dimension");
      }
      pl.normal = {0.0, 0.0, 0.0};
      for (int k = 0; k < dim; ++k) {
        pl.normal[static_cast<std::size_t>(k)] =
            parse_double(na[static_cast<std::size_t>(k)], ctx + " normal");
      }
      pl.offset = parse_double(jn.at("offset"), ctx + " offset");
      pl.sharpness = parse_double(jn.at("sharpness"), ctx + " sharpness");
      n.leaf = true;
      n.prim = pl;
    } else if (kind == "constant") {
      ConstantPrimitive c;
      c.dim = dim;
      c.value = parse_double(jn.at("value"), ctx + " value");
      n.leaf = true;
      n.prim = c;
    } else {
      throw SchemaError(ctx + ": unknown primitive family '" + kind + "'");
    }
    } catch (const json::exception& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    nodes.push_back(std::move(n));
    ++idx;
  }
  try {
    return CsgTree(std::move(nodes), dim, omega, temperature);
  } catch (const ParameterError& e) {
    throw ParseError(std::string("invalid tree structure: ") + e.what());
  }
}

}  // namespace fcsg
