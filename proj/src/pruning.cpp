#include "fcsg/pruning.hpp"

#include <cmath>
#include <functional>
#include <optional>

#include <json.hpp>

#include "fcsg/autodiff.hpp"

namespace fcsg {

namespace {

// Root occupancy with one node's output forced to a constant.
std::vector<double> eval_with_override(const CsgTree& tree, std::span<const Point> points,
                                       int override_node, double value) {
  std::vector<BarycentricWeights> storage;
  const auto weights = cache_weights(tree, storage);
  std::vector<double> act(static_cast<std::size_t>(tree.size()));
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    for (int i = 0; i < tree.size(); ++i) {
      if (i == override_node) {
        act[static_cast<std::size_t>(i)] = value;
        continue;
      }
      const CsgNode& n = tree.node(i);
      act[static_cast<std::size_t>(i)] =
          n.leaf ? occupancy(n.prim, p)
                 : combine_node(n, weights[static_cast<std::size_t>(i)],
                                act[static_cast<std::size_t>(n.left)],
                                act[static_cast<std::size_t>(n.right)]);
    }
    out.push_back(act.back());
  }
  return out;
}

// Copies `tree` into post-order, replacing the subtree rooted at
// `replace_id`. When `constant` is set the subtree becomes a constant leaf;
// otherwise it becomes a copy of the subtree rooted at `graft_id`.
CsgTree rebuild(const CsgTree& tree, int replace_id, std::optional<double> constant,
                int graft_id = -1) {
  std::vector<CsgNode> out;
  std::function<int(int)> copy_rec = [&](int idx) -> int {
    if (idx == replace_id) {
      if (constant) {
        CsgNode leaf;
        leaf.leaf = true;
        ConstantPrimitive c;
        c.value = *constant;
        c.dim = tree.dim();
        leaf.prim = c;
        out.push_back(leaf);
        return static_cast<int>(out.size()) - 1;
      }
      // graft the surviving child in place of this node
      const int saved = replace_id;
      replace_id = -1;
      const int r = copy_rec(graft_id);
      replace_id = saved;
      return r;
    }
    const CsgNode& n = tree.node(idx);
    if (n.leaf) {
      out.push_back(n);
      return static_cast<int>(out.size()) - 1;
    }
    const int l = copy_rec(n.left);
    const int r = copy_rec(n.right);
    CsgNode b = n;
    b.left = l;
    b.right = r;
    out.push_back(b);
    return static_cast<int>(out.size()) - 1;
  };
  copy_rec(tree.root());
  return CsgTree(std::move(out), tree.dim(), tree.omega(), tree.temperature());
}

// The boolean operation a node reduces to when its weights are exactly (or
// numerically) one-hot; nullopt for genuinely blended weights.
std::optional<FixedOp> effective_one_hot_op(const CsgTree& tree, const CsgNode& n) {
  if (n.mode == BooleanMode::FixedProduct || n.mode == BooleanMode::FixedGodel) {
    return n.op;
  }
  if (n.mode == BooleanMode::Unified) {
    const BarycentricWeights w =
        control_to_barycentric(n.control, tree.omega(), tree.temperature());
    for (int i = 0; i < 4; ++i) {
      if (w[i] > 1.0 - 1e-9) {
        static const std::array<FixedOp, 4> kCorner{
            FixedOp::Intersection, FixedOp::Union, FixedOp::DiffLeftRight,
            FixedOp::DiffRightLeft};
        return kCorner[static_cast<std::size_t>(i)];
      }
    }
  }
  return std::nullopt;
}

struct Collapse {
  enum class Kind { Sibling, Constant } kind;
  double value = 0.0;  // for Kind::Constant
};

// Reduction of a one-hot boolean with one exact-constant child. nullopt when
// the reduction is neither the sibling nor a constant (complement cases).
std::optional<Collapse> collapse_rule(FixedOp op, bool const_on_left, double v) {
  const bool one = v == 1.0;
  const bool zero = v == 0.0;
  if (!one && !zero) return std::nullopt;
  switch (op) {
    case FixedOp::Intersection:
      return one ? Collapse{Collapse::Kind::Sibling}
                 : Collapse{Collapse::Kind::Constant, 0.0};
    case FixedOp::Union:
      return zero ? Collapse{Collapse::Kind::Sibling}
                  : Collapse{Collapse::Kind::Constant, 1.0};
    case FixedOp::DiffLeftRight:
      if (const_on_left) {
        if (zero) return Collapse{Collapse::Kind::Constant, 0.0};
        return std::nullopt;  // 1 - y
      }
      return zero ? Collapse{Collapse::Kind::Sibling}
                  : Collapse{Collapse::Kind::Constant, 0.0};
    case FixedOp::DiffRightLeft:
      if (!const_on_left) {
        if (zero) return Collapse{Collapse::Kind::Constant, 0.0};
        return std::nullopt;  // 1 - x
      }
      return zero ? Collapse{Collapse::Kind::Sibling}
                  : Collapse{Collapse::Kind::Constant, 0.0};
  }
  return std::nullopt;
}

std::optional<double> constant_value(const CsgNode& n) {
  if (!n.leaf) return std::nullopt;
  if (const auto* c = std::get_if<ConstantPrimitive>(&n.prim)) return c->value;
  return std::nullopt;
}

// Folds constant children into their parents where the reduction is exact.
CsgTree simplify_constants(const CsgTree& tree, bool* changed_out) {
  CsgTree work = tree;
  bool changed_any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<BarycentricWeights> storage;
    const auto weights = cache_weights(work, storage);
    for (int i = 0; i < work.size() && !changed; ++i) {
      const CsgNode& n = work.node(i);
      if (n.leaf) continue;
      const auto lc = constant_value(work.node(n.left));
      const auto rc = constant_value(work.node(n.right));
      if (lc && rc) {
        const double v =
            combine_node(n, weights[static_cast<std::size_t>(i)], *lc, *rc);
        work = rebuild(work, i, v);
        changed = true;
        break;
      }
      if (!lc && !rc) continue;
      const auto op = effective_one_hot_op(work, n);
      if (!op) continue;
      const bool const_on_left = lc.has_value();
      const double v = const_on_left ? *lc : *rc;
      const auto rule = collapse_rule(*op, const_on_left, v);
      if (!rule) continue;
      if (rule->kind == Collapse::Kind::Sibling) {
        work = rebuild(work, i, std::nullopt, const_on_left ? n.right : n.left);
      } else {
        work = rebuild(work, i, rule->value);
      }
      changed = true;
    }
    changed_any = changed_any || changed;
  }
  if (changed_out != nullptr) *changed_out = changed_any;
  return work;
}

}  // namespace

void PruneConfig::validate() const {
  if (!(threshold > 0.0)) throw ParameterError("prune threshold must be > 0");
  if (eval_points.empty()) throw ParameterError("prune eval points must be nonempty");
}

const char* verdict_name(RedundancyVerdict v) {
  switch (v) {
    case RedundancyVerdict::WRedundant:
      return "w-redundant";
    case RedundancyVerdict::EmptyRedundant:
      return "empty-redundant";
    case RedundancyVerdict::NotRedundant:
      return "not-redundant";
  }
  return "not-redundant";
}

namespace {

RedundancyVerdict verdict_with_baseline(const CsgTree& tree, int node_id,
                                        const PruneConfig& cfg,
                                        const std::vector<double>& baseline) {
  const std::vector<double> as_full =
      eval_with_override(tree, cfg.eval_points, node_id, 1.0);
  if (loss_mse(as_full, baseline) <= cfg.threshold) return RedundancyVerdict::WRedundant;
  const std::vector<double> as_empty =
      eval_with_override(tree, cfg.eval_points, node_id, 0.0);
  if (loss_mse(as_empty, baseline) <= cfg.threshold) {
    return RedundancyVerdict::EmptyRedundant;
  }
  return RedundancyVerdict::NotRedundant;
}

}  // namespace

RedundancyVerdict subtree_redundancy(const CsgTree& tree, int node_id,
                                     const PruneConfig& cfg) {
  cfg.validate();
  if (node_id < 0 || node_id >= tree.root()) {
    throw ParameterError("subtree_redundancy: node id must name a proper subtree");
  }
  return verdict_with_baseline(tree, node_id, cfg, eval(tree, cfg.eval_points));
}

CsgTree prune(const CsgTree& tree, const PruneConfig& cfg, PruneReport* report) {
  cfg.validate();
  PruneReport local;
  PruneReport& rep = report != nullptr ? *report : local;
  rep = PruneReport{};
  std::tie(rep.prims_before, rep.bools_before) = tree.node_count();

  const std::vector<double> original = eval(tree, cfg.eval_points);
  CsgTree work = simplify_constants(tree, nullptr);

  // Node count strictly decreases with every deletion, so this terminates;
  // the cap is a belt-and-braces guard.
  for (int guard = 0; guard < tree.size(); ++guard) {
    bool changed = false;
    const std::vector<double> baseline = eval(work, cfg.eval_points);
    for (int id = 0; id < work.root(); ++id) {
      // Constant leaves are already maximally reduced.
      if (constant_value(work.node(id))) continue;
      const RedundancyVerdict verdict = verdict_with_baseline(work, id, cfg, baseline);
      if (verdict == RedundancyVerdict::NotRedundant) continue;
      rep.deletions.push_back({id, verdict});
      const double v = verdict == RedundancyVerdict::WRedundant ? 1.0 : 0.0;
      work = rebuild(work, id, v);
      work = simplify_constants(work, nullptr);
      changed = true;
      break;
    }
    if (!changed) break;
  }

  std::tie(rep.prims_after, rep.bools_after) = work.node_count();
  rep.mse_change = loss_mse(eval(work, cfg.eval_points), original);
  return work;
}

std::string prune_report_json(const PruneReport& report) {
  nlohmann::json doc;
  doc["primitives_before"] = report.prims_before;
  doc["booleans_before"] = report.bools_before;
  doc["primitives_after"] = report.prims_after;
  doc["booleans_after"] = report.bools_after;
  doc["mse_change"] = report.mse_change;
  nlohmann::json dels = nlohmann::json::array();
  for (const auto& d : report.deletions) {
    dels.push_back({{"node_id", d.node_id}, {"verdict", verdict_name(d.verdict)}});
  }
  doc["deletions"] = std::move(dels);
  return doc.dump(2);
}

}  // namespace fcsg
