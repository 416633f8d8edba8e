#include "fcsg/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace fcsg {

AdamState::AdamState(int n, AdamConfig c) : m(static_cast<std::size_t>(n), 0.0),
                                            v(static_cast<std::size_t>(n), 0.0),
                                            cfg(c) {
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
    throw ParameterError("Adam betas must be in (0,1)");
  }
  if (!(cfg.lr > 0.0)) throw ParameterError("Adam learning rate must be > 0");
  if (!(cfg.eps > 0.0)) throw ParameterError("Adam epsilon must be > 0");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != state.m.size() || grads.size() != state.m.size()) {
    throw ShapeError("adam_step: length mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw NumericalError("adam_step: non-finite gradient, step aborted");
    }
  }
  ++state.step_count;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

void SamplerConfig::validate() const {
  if (frac_surface < 0.0 || frac_near < 0.0 || frac_volume < 0.0) {
    throw ParameterError("sampler fractions must be nonnegative");
  }
  if (std::abs(frac_surface + frac_near + frac_volume - 1.0) > 1e-9) {
    throw ParameterError("sampler fractions must sum to 1");
  }
  if (!(band_halfwidth > 0.0 && band_halfwidth < 0.5)) {
    throw ParameterError("near-surface band half-width must be in (0, 0.5)");
  }
  if (resample_every < 1) throw ParameterError("resample_every must be >= 1");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (candidate_budget_factor < 1) throw ParameterError("candidate budget must be >= 1");
}

SampleBatch sample_points(const TargetOracle& target, const SamplerConfig& cfg, Rng& rng,
                          std::ostream* log) {
  cfg.validate();
  if (!target.occupancy) throw ParameterError("target oracle has no occupancy function");

  int n_surface = static_cast<int>(std::lround(cfg.frac_surface * cfg.batch_size));
  int n_near = static_cast<int>(std::lround(cfg.frac_near * cfg.batch_size));
  if (n_surface + n_near > cfg.batch_size) n_near = cfg.batch_size - n_surface;
  if (!target.surface_sample && n_surface > 0) {
    if (log != nullptr) {
      *log << "sample_points: target has no surface sampler; merging surface quota into "
              "near-surface quota\n";
    }
    n_near += n_surface;
    n_surface = 0;
  }
  const int n_volume = cfg.batch_size - n_surface - n_near;

  SampleBatch batch;
  batch.points.reserve(static_cast<std::size_t>(cfg.batch_size));
  batch.occ.reserve(static_cast<std::size_t>(cfg.batch_size));

  for (int i = 0; i < n_surface; ++i) {
    const Point p = target.surface_sample(rng);
    batch.points.push_back(p);
    batch.occ.push_back(target.occupancy(p));
  }

  const double band_lo = 0.5 - cfg.band_halfwidth;
  const double band_hi = 0.5 + cfg.band_halfwidth;
  const auto& band = target.band_value ? target.band_value : target.occupancy;
  long budget = static_cast<long>(cfg.candidate_budget_factor) * cfg.batch_size;
  for (int i = 0; i < n_near; ++i) {
    bool found = false;
    while (budget-- > 0) {
      const Point p = target.uniform_point(rng);
      const double o = band(p);
      if (o > band_lo && o < band_hi) {
        batch.points.push_back(p);
        batch.occ.push_back(target.occupancy(p));
        found = true;
        break;
      }
    }
    if (!found) {
      throw SamplingError(
          "near-surface rejection sampling exhausted its candidate budget; consider "
          "widening the occupancy band");
    }
  }

  for (int i = 0; i < n_volume; ++i) {
    const Point p = target.uniform_point(rng);
    batch.points.push_back(p);
    batch.occ.push_back(target.occupancy(p));
  }
  return batch;
}

FitMode fit_mode_from_name(const std::string& name) {
  if (name == "unified") return FitMode::Unified;
  if (name == "bilinear") return FitMode::Bilinear;
  if (name == "fixed-product") return FitMode::FixedProduct;
  if (name == "fixed-godel") return FitMode::FixedGodel;
  throw ParameterError("unknown fit mode '" + name + "'");
}

std::string fit_mode_name(FitMode mode) {
  switch (mode) {
    case FitMode::Unified:
      return "unified";
    case FitMode::Bilinear:
      return "bilinear";
    case FitMode::FixedProduct:
      return "fixed-product";
    case FitMode::FixedGodel:
      return "fixed-godel";
  }
  return "unified";
}

FitResult fit(CsgTree tree, const TargetOracle& target, const FitConfig& cfg,
              std::ostream* log) {
  if (cfg.iterations < 1) throw ParameterError("fit: iterations must be >= 1");
  cfg.sampler.validate();
  if (tree.dim() != target.dim) throw ShapeError("fit: tree/target dimension mismatch");

  Rng rng(cfg.seed);

  if (cfg.mode != FitMode::Unified) {
    for (int i = 0; i < tree.size(); ++i) {
      CsgNode& n = tree.node(i);
      if (n.leaf) continue;
      if (cfg.mode == FitMode::Bilinear) {
        n.mode = BooleanMode::Bilinear;
      } else {
        n.mode = cfg.mode == FitMode::FixedProduct ? BooleanMode::FixedProduct
                                                   : BooleanMode::FixedGodel;
        n.op = static_cast<FixedOp>(uniform_index(rng, 4));
      }
    }
  }

  const ParamLayout layout = ParamLayout::build(tree);
  std::vector<double> params = layout.gather(tree);
  AdamState state(layout.size(), cfg.adam);

  FitResult result{tree, {}, false, ""};
  result.loss_history.reserve(static_cast<std::size_t>(cfg.iterations));

  SampleBatch batch;
  for (int it = 0; it < cfg.iterations; ++it) {
    try {
      if (it % cfg.sampler.resample_every == 0) {
        // only let the first resample narrate quota adjustments
        batch = sample_points(target, cfg.sampler, rng, it == 0 ? log : nullptr);
      }
      const BackwardResult fb = forward_backward(result.tree, batch.points, batch.occ, layout);
      adam_step(state, params, fb.grads);
      layout.scatter(result.tree, params);
      result.loss_history.push_back(fb.loss);
    } catch (const NumericalError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      if (log != nullptr) {
        *log << "fit: aborted at iteration " << it << ": " << e.what() << "\n";
      }
      break;
    }
  }
  return result;
}

double heldout_mse(const CsgTree& tree, const TargetOracle& target, int count, Rng& rng) {
  if (count < 1) throw ParameterError("heldout_mse: count must be >= 1");
  std::vector<Point> points;
  std::vector<double> occ;
  points.reserve(static_cast<std::size_t>(count));
  occ.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Point p = target.uniform_point(rng);
    points.push_back(p);
    occ.push_back(target.occupancy(p));
  }
  return loss_mse(eval(tree, points), occ);
}

}  // namespace fcsg
