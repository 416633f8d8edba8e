#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fcsg/tree.hpp"

namespace fcsg {

struct ParamSlice {
  int node = -1;
  int offset = 0;
  int count = 0;
};

/// Flat view over a tree's trainable scalars, in post-order node order.
/// Boolean controls can be excluded (fixed-boolean ablation modes).
class ParamLayout {
 public:
  static ParamLayout build(const CsgTree& tree, bool include_boolean_controls = true);

  int size() const { return total_; }
  const std::vector<ParamSlice>& slices() const { return slices_; }
  std::optional<ParamSlice> slice_for(int node_id) const;

  std::vector<double> gather(const CsgTree& tree) const;
  void scatter(CsgTree& tree, std::span<const double> params) const;

 private:
  std::vector<ParamSlice> slices_;
  std::vector<int> by_node_;  // node id -> slice index or -1
  int total_ = 0;
};

/// Mean squared error between occupancy batches.
double loss_mse(std::span<const double> pred, std::span<const double> target);

struct BackwardResult {
  double loss = 0.0;
  std::vector<double> grads;
};

/// Loss plus d loss / d theta for every scalar in the layout, by hand-derived
/// per-node backward rules. Godel min/max ties take the left-operand
/// subgradient.
BackwardResult forward_backward(const CsgTree& tree, std::span<const Point> points,
                                std::span<const double> target, const ParamLayout& layout);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
};

/// Central-difference verification oracle; relative error denominator is
/// floored at 1e-8.
FiniteDiffReport finite_diff_check(const CsgTree& tree, std::span<const Point> points,
                                   std::span<const double> target, double step,
                                   const ParamLayout& layout);

}  // namespace fcsg
