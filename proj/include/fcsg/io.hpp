#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fcsg/target.hpp"
#include "fcsg/tree.hpp"

namespace fcsg {

/// CSV with a "dim=<d>,count=<n>" header line, then one "<coords...>,<occ>"
/// row per sample, 17 significant digits.
PointSampleDataset read_dataset(const std::string& path);
void write_dataset(const std::string& path, const PointSampleDataset& dataset);

struct OccupancyGrid {
  int dim = 2;
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> lo{-1.0, -1.0, -1.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::vector<double> values;  // row-major, size = product of dims
};

/// Text header (dims, bbox) followed by little-endian 64-bit floats.
void write_grid(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid read_grid(const std::string& path);

/// Samples tree occupancy at cell centers over the bounding box.
OccupancyGrid export_grid(const CsgTree& tree, const std::array<int, 3>& dims,
                          const std::array<double, 3>& lo, const std::array<double, 3>& hi);

struct SliceImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

/// Grayscale occupancy slice, pixel = round(255 * clamp(occupancy, 0, 1)).
/// For 3D trees the slice is taken perpendicular to `axis` at `offset`;
/// 2D trees render the full domain (axis/offset ignored). `isoline` marks
/// 0.5-crossings in black.
SliceImage render_slice(const CsgTree& tree, int axis, double offset, int resolution,
                        const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                        bool isoline = false);

/// Binary portable graymap (magic P5, maxval 255).
void write_pgm(const std::string& path, const SliceImage& image);

}  // namespace fcsg
