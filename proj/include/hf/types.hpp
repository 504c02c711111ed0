// Core scalar/matrix aliases, the structured grid, snapshot containers and the
// error hierarchy shared by every heterofield component.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hf {

using Real = double;

using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using ArrX = Eigen::Array<Real, Eigen::Dynamic, 1>;
using ArrXX = Eigen::Array<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T> using Mat2T = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3T = Eigen::Matrix<T, 3, 3>;
template <typename T> using Vec3T = Eigen::Matrix<T, 3, 1>;

// ---------------------------------------------------------------------------
// Errors.  Every failure mode raises a subclass so callers (and the CLI) can
// translate categories into distinct exit codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  using Error::Error;
};
struct ConfigurationError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct InvertedElementError : Error {
  using Error::Error;
};
struct OptimizationError : Error {
  using Error::Error;
};
struct NumericRangeError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Format versions written into manifests / checkpoints; readers reject
// anything they do not understand.
inline constexpr int kBundleFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kToolVersion = "heterofield 0.1.0";

// ---------------------------------------------------------------------------
// Grid2D: structured rectangular node grid.  Node i maps to
//   ix = i % nx, iy = i / nx,  X = origin + (ix*hx, iy*hy).
// ---------------------------------------------------------------------------

struct Grid2D {
  int nx = 0;       // nodes along x
  int ny = 0;       // nodes along y
  Vec2 origin = Vec2::Zero();
  Vec2 spacing = Vec2::Zero();  // node spacing (hx, hy), strictly positive

  static Grid2D unit_square(int nx, int ny) {
    Grid2D g;
    g.nx = nx;
    g.ny = ny;
    g.origin = Vec2::Zero();
    g.spacing = Vec2(1.0 / (nx - 1), 1.0 / (ny - 1));
    return g;
  }

  int size() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }

  Vec2 node(int i) const {
    const int ix = i % nx, iy = i / nx;
    return origin + Vec2(ix * spacing[0], iy * spacing[1]);
  }

  Real length_x() const { return (nx - 1) * spacing[0]; }
  Real length_y() const { return (ny - 1) * spacing[1]; }

  // All node coordinates, one row per node, columns (X1, X2).
  MatX node_coords() const {
    MatX xs(size(), 2);
    for (int i = 0; i < size(); ++i) xs.row(i) = node(i).transpose();
    return xs;
  }

  void validate() const {
    if (nx < 3 || ny < 3)
      throw ConfigurationError("Grid2D: need at least 3 nodes per direction, got " +
                               std::to_string(nx) + "x" + std::to_string(ny));
    if (!(spacing[0] > 0) || !(spacing[1] > 0))
      throw ConfigurationError("Grid2D: node spacing must be positive");
  }

  bool operator==(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && origin == o.origin && spacing == o.spacing;
  }
};

// ---------------------------------------------------------------------------
// FieldSnapshotSeries: per-load-step nodal fields on a Grid2D.  values[j] has
// one row per node and `components` columns; steps are the load-parameter
// values (strictly increasing).
// Component order for displacement fields: (u1, u2).
// Component order for tensor fields:       (F11, F12, F21, F22).
// ---------------------------------------------------------------------------

struct FieldSnapshotSeries {
  Grid2D grid;
  std::vector<Real> steps;
  std::vector<MatX> values;
  int components = 0;

  int n_steps() const { return static_cast<int>(steps.size()); }

  void validate() const {
    grid.validate();
    if (steps.size() != values.size())
      throw DimensionError("FieldSnapshotSeries: steps/values size mismatch");
    for (std::size_t j = 0; j + 1 < steps.size(); ++j)
      if (!(steps[j] < steps[j + 1]))
        throw DataError("FieldSnapshotSeries: load steps must be strictly increasing");
    for (const MatX& v : values) {
      if (v.rows() != grid.size() || v.cols() != components)
        throw DimensionError("FieldSnapshotSeries: snapshot shape mismatch");
    }
  }
};

}  // namespace hf
