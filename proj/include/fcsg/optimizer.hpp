#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fcsg/autodiff.hpp"
#include "fcsg/target.hpp"
#include "fcsg/tree.hpp"

namespace fcsg {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;
  AdamConfig cfg;

  explicit AdamState(int n, AdamConfig cfg = {});
};

/// Bias-corrected Adam update in place. A non-finite gradient aborts the
/// step with state and parameters unchanged.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct SamplerConfig {
  double frac_surface = 0.4;
  double frac_near = 0.4;
  double frac_volume = 0.2;
  /// Near-surface candidates are kept when target occupancy falls inside
  /// (0.5 - band_halfwidth, 0.5 + band_halfwidth).
  double band_halfwidth = 0.4;
  int resample_every = 10;
  int batch_size = 4096;
  int candidate_budget_factor = 100;

  void validate() const;
};

struct SampleBatch {
  std::vector<Point> points;
  std::vector<double> occ;
};

/// Draws a batch per the surface/near/volume fractions. Without an oracle
/// surface sampler the surface quota is merged into the near-surface quota
/// (noted on `log` when given).
SampleBatch sample_points(const TargetOracle& target, const SamplerConfig& cfg, Rng& rng,
                          std::ostream* log = nullptr);

enum class FitMode { Unified, Bilinear, FixedProduct, FixedGodel };

FitMode fit_mode_from_name(const std::string& name);
std::string fit_mode_name(FitMode mode);

struct FitConfig {
  int iterations = 5000;
  SamplerConfig sampler;
  AdamConfig adam;
  FitMode mode = FitMode::Unified;
  unsigned long long seed = 0;
};

struct FitResult {
  CsgTree tree;
  std::vector<double> loss_history;
  bool aborted = false;
  std::string abort_reason;
};

/// Runs iterations of forward/backward + Adam with periodic resampling.
/// Fixed-boolean modes freeze every boolean node to an operation drawn
/// uniformly from the four corner operators; bilinear mode swaps in the
/// two-control ablation operator. A numerical failure aborts and returns
/// the last good tree with the history so far.
FitResult fit(CsgTree tree, const TargetOracle& target, const FitConfig& cfg,
              std::ostream* log = nullptr);

/// Held-out MSE against the target on uniformly drawn volume points.
double heldout_mse(const CsgTree& tree, const TargetOracle& target, int count, Rng& rng);

}  // namespace fcsg
