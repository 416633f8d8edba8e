#pragma once

#include <string>
#include <vector>

#include "fcsg/tree.hpp"

namespace fcsg {

struct PruneConfig {
  /// Mean-squared soft occupancy tolerance for redundancy.
  double threshold = 1e-3;
  /// Points the redundancy tests are evaluated on.
  std::vector<Point> eval_points;

  void validate() const;
};

enum class RedundancyVerdict { WRedundant, EmptyRedundant, NotRedundant };

const char* verdict_name(RedundancyVerdict v);

/// Classifies a proper subtree by replacing its output with constant 1
/// (W-redundant) or constant 0 (empty-redundant) and measuring the MSE of
/// the root occupancy change over the config points. Ties go to W-redundant.
RedundancyVerdict subtree_redundancy(const CsgTree& tree, int node_id,
                                     const PruneConfig& cfg);

struct PruneReport {
  struct Deletion {
    int node_id = -1;
    RedundancyVerdict verdict = RedundancyVerdict::NotRedundant;
  };
  std::vector<Deletion> deletions;
  int prims_before = 0;
  int bools_before = 0;
  int prims_after = 0;
  int bools_after = 0;
  /// Root MSE between original and pruned tree over the config points.
  double mse_change = 0.0;
};

/// Post-order redundancy deletion, repeated to a fixed point (capped at the
/// original tree height). Redundant subtrees become constant leaves; boolean
/// nodes collapse onto their sibling only when the substituted operator is
/// exactly the identity (numerically one-hot weights or fixed operations).
CsgTree prune(const CsgTree& tree, const PruneConfig& cfg, PruneReport* report = nullptr);

std::string prune_report_json(const PruneReport& report);

}  // namespace fcsg
