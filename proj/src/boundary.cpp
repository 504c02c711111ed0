#include "hf/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace hf {

const char* to_string(EdgeId e) {
  switch (e) {
    case EdgeId::XMin: return "x_min";
    case EdgeId::XMax: return "x_max";
    case EdgeId::YMin: return "y_min";
    case EdgeId::YMax: return "y_max";
  }
  return "?";
}

EdgeId edge_from_string(const std::string& s) {
  for (EdgeId e : {EdgeId::XMin, EdgeId::XMax, EdgeId::YMin, EdgeId::YMax})
    if (s == to_string(e)) return e;
  throw ConfigurationError("unknown edge name: " + s);
}

Vec2 outward_normal(EdgeId e) {
  switch (e) {
    case EdgeId::XMin: return Vec2(-1.0, 0.0);
    case EdgeId::XMax: return Vec2(1.0, 0.0);
    case EdgeId::YMin: return Vec2(0.0, -1.0);
    case EdgeId::YMax: return Vec2(0.0, 1.0);
  }
  return Vec2::Zero();
}

std::vector<int> edge_node_indices(const Grid2D& grid, EdgeId e) {
  std::vector<int> idx;
  switch (e) {
    case EdgeId::XMin:
      for (int iy = 0; iy < grid.ny; ++iy) idx.push_back(grid.index(0, iy));
      break;
    case EdgeId::XMax:
      for (int iy = 0; iy < grid.ny; ++iy) idx.push_back(grid.index(grid.nx - 1, iy));
      break;
    case EdgeId::YMin:
      for (int ix = 0; ix < grid.nx; ++ix) idx.push_back(grid.index(ix, 0));
      break;
    case EdgeId::YMax:
      for (int ix = 0; ix < grid.nx; ++ix) idx.push_back(grid.index(ix, grid.ny - 1));
      break;
  }
  return idx;
}

void BoundaryData::validate(const Grid2D* grid) const {
  if (!(length_x > 0) || !(length_y > 0))
    throw ConfigurationError("BoundaryData: reference edge lengths must be positive");
  const int m = n_steps();
  if (m < 1) throw ConfigurationError("BoundaryData: at least one load step required");
  for (int j = 0; j + 1 < m; ++j)
    if (!(steps[j] < steps[j + 1]))
      throw DataError("BoundaryData: load steps must be strictly increasing");
  if (fx.size() != m || fy.size() != m)
    throw DimensionError("BoundaryData: resultant series must match the step count");
  if (!fx.allFinite() || !fy.allFinite())
    throw DataError("BoundaryData: non-finite resultant force");
  for (int k = 0; k < 4; ++k) {
    const EdgeCondition& ec = edges[k];
    if (ec.per_node.empty()) continue;
    if (static_cast<int>(ec.per_node.size()) != m)
      throw DimensionError("BoundaryData: per-node traction tables must cover every step");
    for (const MatX& t : ec.per_node) {
      if (t.cols() != 2)
        throw DimensionError("BoundaryData: per-node tractions need 2 components");
      if (!t.allFinite()) throw DataError("BoundaryData: non-finite per-node traction");
      if (grid) {
        const auto idx = edge_node_indices(*grid, static_cast<EdgeId>(k));
        if (t.rows() != static_cast<int>(idx.size()))
          throw DimensionError("BoundaryData: per-node traction rows must match edge nodes");
      }
    }
  }
}

Mat2 BoundaryData::average_stress(int j) const {
  if (j < 0 || j >= n_steps())
    throw DimensionError("BoundaryData::average_stress: step index out of range");
  if (!(length_x > 0) || !(length_y > 0))
    throw ConfigurationError("BoundaryData: reference edge lengths must be positive");
  Mat2 P = Mat2::Zero();
  P(0, 0) = fx[j] / length_y;
  P(1, 1) = fy[j] / length_x;
  return P;
}

Vec2 BoundaryData::uniform_traction(EdgeId e, int j) const {
  const Mat2 P = average_stress(j);
  // t = P N with P the diagonal average stress
  return P * outward_normal(e);
}

Real BoundaryData::max_average_stress() const {
  Real s = 0.0;
  for (int j = 0; j < n_steps(); ++j)
    s = std::max(s, average_stress(j).cwiseAbs().maxCoeff());
  return s;
}

VecX spatial_average(const Grid2D& grid, const MatX& values) {
  grid.validate();
  if (values.rows() != grid.size())
    throw DimensionError("spatial_average: row count must equal the node count");
  auto w1 = [](int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };
  VecX acc = VecX::Zero(values.cols());
  Real total = 0.0;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Real w = w1(ix, grid.nx) * w1(iy, grid.ny);
      acc += w * values.row(grid.index(ix, iy)).transpose();
      total += w;
    }
  return acc / total;
}

Vec2 edge_resultant(const Grid2D& grid, EdgeId e, const MatX& P_edge) {
  grid.validate();
  const auto idx = edge_node_indices(grid, e);
  const int n = static_cast<int>(idx.size());
  if (P_edge.rows() != n || P_edge.cols() != 4)
    throw DimensionError("edge_resultant: stress table must be (edge nodes) x 4");
  const Real h =
      (e == EdgeId::XMin || e == EdgeId::XMax) ? grid.spacing[1] : grid.spacing[0];
  const Vec2 N = outward_normal(e);
  Vec2 f = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    Mat2 P;
    P << P_edge(i, 0), P_edge(i, 1), P_edge(i, 2), P_edge(i, 3);
    const Real w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    f += w * h * (P * N);
  }
  return f;
}

}  // namespace hf
