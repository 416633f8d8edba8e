#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fcsg/rng.hpp"
#include "fcsg/tree.hpp"

namespace fcsg {

/// Ground-truth occupancy source for fitting and evaluation.
struct TargetOracle {
  int dim = 2;
  std::array<double, 3> lo{-1.0, -1.0, -1.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::function<double(const Point&)> occupancy;
  /// Value used for near-surface band tests.  Defaults to `occupancy`;
  /// crisp tree targets supply their pre-threshold soft occupancy here, since
  /// a binarized occupancy never falls strictly inside the band.
  std::function<double(const Point&)> band_value;
  /// Draws a point on the target surface; null when no analytic sampler
  /// exists (quadric leaves, point-sample datasets).
  std::function<Point(Rng&)> surface_sample;

  Point uniform_point(Rng& rng) const;
};

/// Wraps a CSG tree as a target. Crisp targets binarize occupancy at 0.5.
/// A surface sampler is provided when the target is crisp and every leaf is
/// a sphere or plane.
TargetOracle make_tree_target(std::shared_ptr<const CsgTree> tree, bool crisp);

struct PointSampleDataset {
  int dim = 2;
  std::vector<Point> points;
  std::vector<double> occ;
};

/// Nearest-sample occupancy lookup over a point-sample dataset.
TargetOracle make_dataset_target(PointSampleDataset dataset);

/// Bundled analytic targets: "two-circles" (union of two soft circles),
/// "quad4" (crisp 4-primitive tree), "quadrics8" (crisp tree of 8 quadrics,
/// 2D), "blob" (soft organic union of three spheres).
std::shared_ptr<const CsgTree> builtin_target_tree(const std::string& name);
TargetOracle builtin_target(const std::string& name, bool crisp);

/// True when the builtin target is crisp by default.
bool builtin_target_default_crisp(const std::string& name);

}  // namespace fcsg
