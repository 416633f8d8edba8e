#include "fcsg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fcsg/errors.hpp"

namespace fcsg {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw ParseError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  return f;
}

std::vector<double> split_doubles(const std::string& line, const std::string& context) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) throw ParseError(context + ": malformed number '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

PointSampleDataset read_dataset(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string header;
  if (!std::getline(f, header)) throw ParseError(path + ": empty dataset file");
  int dim = 0;
  long count = 0;
  if (std::sscanf(header.c_str(), "dim=%d,count=%ld", &dim, &count) != 2) {
    throw ParseError(path + ": header must be 'dim=<d>,count=<n>', got '" + header + "'");
  }
  if (dim != 2 && dim != 3) throw ParseError(path + ": dimension must be 2 or 3");
  if (count < 0) throw ParseError(path + ": negative count");

  PointSampleDataset ds;
  ds.dim = dim;
  std::string line;
  long row = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    ++row;
    const std::vector<double> vals = split_doubles(line, path + " row " + std::to_string(row));
    if (static_cast<int>(vals.size()) != dim + 1) {
      throw ParseError(path + " row " + std::to_string(row) + ": expected " +
                       std::to_string(dim + 1) + " columns");
    }
    const double occ = vals.back();
    if (!(occ >= 0.0 && occ <= 1.0)) {
      throw ParseError(path + " row " + std::to_string(row) + ": occupancy " +
                       fmt_double(occ) + " outside [0,1]");
    }
    Point p;
    p.dim = dim;
    for (int i = 0; i < dim; ++i) p.c[static_cast<std::size_t>(i)] = vals[static_cast<std::size_t>(i)];
    ds.points.push_back(p);
    ds.occ.push_back(occ);
  }
  if (row != count) {
    throw ParseError(path + ": header count " + std::to_string(count) + " but " +
                     std::to_string(row) + " rows");
  }
  return ds;
}

void write_dataset(const std::string& path, const PointSampleDataset& dataset) {
  std::ofstream f = open_out(path);
  f << "dim=" << dataset.dim << ",count=" << dataset.points.size() << "\n";
  for (std::size_t i = 0; i < dataset.points.size(); ++i) {
    const Point& p = dataset.points[i];
    for (int k = 0; k < dataset.dim; ++k) f << fmt_double(p.c[static_cast<std::size_t>(k)]) << ",";
    f << fmt_double(dataset.occ[i]) << "\n";
  }
}

void write_grid(const std::string& path, const OccupancyGrid& grid) {
  std::size_t expected = 1;
  for (int i = 0; i < grid.dim; ++i) {
    expected *= static_cast<std::size_t>(grid.dims[static_cast<std::size_t>(i)]);
  }
  if (grid.values.size() != expected) {
    throw ShapeError("grid value count does not match dims");
  }
  std::ofstream f = open_out(path, std::ios::out | std::ios::binary);
  f << "OCCGRID 1\n";
  f << "dim " << grid.dim << "\n";
  f << "dims";
  for (int i = 0; i < grid.dim; ++i) f << " " << grid.dims[static_cast<std::size_t>(i)];
  f << "\nbbox";
  for (int i = 0; i < grid.dim; ++i) f << " " << fmt_double(grid.lo[static_cast<std::size_t>(i)]);
  for (int i = 0; i < grid.dim; ++i) f << " " << fmt_double(grid.hi[static_cast<std::size_t>(i)]);
  f << "\ndata\n";
  // Little-endian platforms write doubles directly.
  f.write(reinterpret_cast<const char*>(grid.values.data()),
          static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

OccupancyGrid read_grid(const std::string& path) {
  std::ifstream f = open_in(path, std::ios::in | std::ios::binary);
  std::string magic, line;
  std::getline(f, magic);
  if (magic != "OCCGRID 1") throw ParseError(path + ": unsupported grid header '" + magic + "'");
  OccupancyGrid grid;
  std::size_t expected = 1;
  while (std::getline(f, line)) {
    if (line == "data") break;
    std::stringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "dim") {
      ss >> grid.dim;
    } else if (key == "dims") {
      expected = 1;
      for (int i = 0; i < grid.dim; ++i) {
        ss >> grid.dims[static_cast<std::size_t>(i)];
        expected *= static_cast<std::size_t>(grid.dims[static_cast<std::size_t>(i)]);
      }
    } else if (key == "bbox") {
      for (int i = 0; i < grid.dim; ++i) ss >> grid.lo[static_cast<std::size_t>(i)];
      for (int i = 0; i < grid.dim; ++i) ss >> grid.hi[static_cast<std::size_t>(i)];
    } else {
      throw ParseError(path + ": unknown grid header field '" + key + "'");
    }
    if (!ss) throw ParseError(path + ": malformed grid header line '" + line + "'");
  }
  grid.values.resize(expected);
  f.read(reinterpret_cast<char*>(grid.values.data()),
         static_cast<std::streamsize>(expected * sizeof(double)));
  if (static_cast<std::size_t>(f.gcount()) != expected * sizeof(double)) {
    throw ParseError(path + ": truncated grid data");
  }
  return grid;
}

OccupancyGrid export_grid(const CsgTree& tree, const std::array<int, 3>& dims,
                          const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  OccupancyGrid grid;
  grid.dim = tree.dim();
  grid.dims = dims;
  grid.lo = lo;
  grid.hi = hi;
  std::size_t total = 1;
  for (int i = 0; i < grid.dim; ++i) {
    if (dims[static_cast<std::size_t>(i)] < 1) throw ParameterError("grid dims must be >= 1");
    total *= static_cast<std::size_t>(dims[static_cast<std::size_t>(i)]);
  }
  grid.values.reserve(total);

  const auto center = [&](int axis, int i) {
    const std::size_t k = static_cast<std::size_t>(axis);
    const double step = (hi[k] - lo[k]) / dims[k];
    return lo[k] + (i + 0.5) * step;
  };
  if (grid.dim == 2) {
    for (int ix = 0; ix < dims[0]; ++ix) {
      for (int iy = 0; iy < dims[1]; ++iy) {
        grid.values.push_back(eval_stack(tree, Point::xy(center(0, ix), center(1, iy))));
      }
    }
  } else {
    for (int ix = 0; ix < dims[0]; ++ix) {
      for (int iy = 0; iy < dims[1]; ++iy) {
        for (int iz = 0; iz < dims[2]; ++iz) {
          grid.values.push_back(
              eval_stack(tree, Point::xyz(center(0, ix), center(1, iy), center(2, iz))));
        }
      }
    }
  }
  return grid;
}

SliceImage render_slice(const CsgTree& tree, int axis, double offset, int resolution,
                        const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                        bool isoline) {
  if (resolution < 2) throw ParameterError("slice resolution must be >= 2");
  int ax0 = 0, ax1 = 1;
  if (tree.dim() == 3) {
    if (axis < 0 || axis > 2) throw ParameterError("slice axis must be 0, 1, or 2");
    if (offset < lo[static_cast<std::size_t>(axis)] ||
        offset > hi[static_cast<std::size_t>(axis)]) {
      throw ParameterError("slice offset outside bounding box");
    }
    ax0 = axis == 0 ? 1 : 0;
    ax1 = axis == 2 ? 1 : 2;
  }

  SliceImage img;
  img.width = resolution;
  img.height = resolution;
  img.pixels.resize(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));

  std::vector<double> occ(img.pixels.size());
  const std::size_t k0 = static_cast<std::size_t>(ax0), k1 = static_cast<std::size_t>(ax1);
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      Point p;
      p.dim = tree.dim();
      if (tree.dim() == 3) p.c[static_cast<std::size_t>(axis)] = offset;
      p.c[k0] = lo[k0] + (i + 0.5) * (hi[k0] - lo[k0]) / resolution;
      // top image row = highest coordinate
      p.c[k1] = hi[k1] - (j + 0.5) * (hi[k1] - lo[k1]) / resolution;
      occ[static_cast<std::size_t>(j) * resolution + i] = eval_stack(tree, p);
    }
  }
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const double c = std::clamp(occ[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * c));
  }
  if (isoline) {
    for (int j = 0; j < resolution; ++j) {
      for (int i = 0; i < resolution; ++i) {
        const std::size_t idx = static_cast<std::size_t>(j) * resolution + i;
        const double a = occ[idx] - 0.5;
        const bool crosses =
            (i + 1 < resolution && a * (occ[idx + 1] - 0.5) < 0.0) ||
            (j + 1 < resolution &&
             a * (occ[idx + static_cast<std::size_t>(resolution)] - 0.5) < 0.0);
        if (crosses) img.pixels[idx] = 0;
      }
    }
  }
  return img;
}

void write_pgm(const std::string& path, const SliceImage& image) {
  std::ofstream f = open_out(path, std::ios::out | std::ios::binary);
  f << "P5\n" << image.width << " " << image.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace fcsg
