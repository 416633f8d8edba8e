#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcsg/barycentric.hpp"
#include "fcsg/fuzzy.hpp"
#include "fcsg/primitives.hpp"

namespace fcsg {

/// Raw boolean controls. Unified nodes use all four entries (c-tilde);
/// bilinear nodes use the first two (mapped through sigmoid to the unit
/// square); fixed nodes carry no trainable controls.
struct BooleanControl {
  std::array<double, 4> c_raw{};
};

enum class BooleanMode { Unified, Bilinear, FixedProduct, FixedGodel };

enum class FixedOp { Intersection, Union, DiffLeftRight, DiffRightLeft };

struct CsgNode {
  bool leaf = false;
  int left = -1;
  int right = -1;
  BooleanMode mode = BooleanMode::Unified;
  BooleanControl control;
  FixedOp op = FixedOp::Union;
  Primitive prim = ConstantPrimitive{};
};

/// Binary CSG tree stored as a post-order node array: node ids are array
/// indices, children precede parents, the root is the last node.
class CsgTree {
 public:
  CsgTree(std::vector<CsgNode> postorder_nodes, int dim, double omega = 10.0,
          double temperature = 1e3);

  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int dim() const { return dim_; }
  double omega() const { return omega_; }
  double temperature() const { return temperature_; }

  const CsgNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  CsgNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<CsgNode>& nodes() const { return nodes_; }

  /// (primitive leaves, boolean nodes)
  std::pair<int, int> node_count() const;

  int height() const;

 private:
  std::vector<CsgNode> nodes_;
  int dim_;
  double omega_;
  double temperature_;
};

/// c = softmax(sin(omega * c_raw) * temperature), max-shifted.
BarycentricWeights control_to_barycentric(const BooleanControl& ctrl, double omega,
                                          double temperature);

/// Full binary tree with 2^depth leaves; every trainable scalar uniform
/// on [-0.5, 0.5].
CsgTree build_full_tree(int depth, PrimitiveKind kind, int dim, Rng& rng,
                        double omega = 10.0, double temperature = 1e3);

struct EvalOptions {
  /// Binarize parametric leaf occupancies at field sign and snap unified
  /// weights to their one-hot argmax, recovering classic crisp CSG.
  bool crisp = false;
};

/// Combine one boolean node's child occupancies. `weights` must be non-null
/// for unified nodes (callers cache the softmax per node).
double combine_node(const CsgNode& node, const BarycentricWeights* weights, double x,
                    double y, bool crisp = false);

/// Per-node unified weights, null entries for leaves and non-unified nodes.
std::vector<const BarycentricWeights*> cache_weights(
    const CsgTree& tree, std::vector<BarycentricWeights>& storage);

/// Batched recursive (depth-first) evaluation.
std::vector<double> eval(const CsgTree& tree, std::span<const Point> points,
                         EvalOptions opts = {});

/// Stack-based post-order evaluation; reads each node exactly once.
double eval_stack(const CsgTree& tree, const Point& p, EvalOptions opts = {},
                  std::size_t* node_visits = nullptr);

std::string serialize(const CsgTree& tree);
CsgTree deserialize(const std::string& text);

}  // namespace fcsg
