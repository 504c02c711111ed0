// Boundary conditions of a rectangular specimen: which edges carry measured
// force data, the per-step resultants, and the traction targets derived from
// them.  Resultants are turned into uniform first-Piola tractions by dividing
// by the reference edge length; per-node traction tables can override the
// uniform assumption when richer measurements exist.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "hf/types.hpp"

namespace hf {

enum class EdgeId { XMin = 0, XMax = 1, YMin = 2, YMax = 3 };

const char* to_string(EdgeId e);
EdgeId edge_from_string(const std::string& s);

// Outward unit normal of the reference configuration.
Vec2 outward_normal(EdgeId e);

// Node indices along an edge, ordered by increasing coordinate.
std::vector<int> edge_node_indices(const Grid2D& grid, EdgeId e);

struct EdgeCondition {
  // Edges with known tractions enter the traction part of the loss; edges
  // without data (e.g. gripped ends whose lateral reactions are unmeasured)
  // are excluded.
  bool in_loss = true;
  // Optional per-node tractions, one (n_edge_nodes x 2) matrix per load
  // step, ordered like edge_node_indices().  Empty means "uniform traction
  // from the resultant".
  std::vector<MatX> per_node;
};

struct BoundaryData {
  Real length_x = 0.0;  // reference extent along x (the y-edges' length)
  Real length_y = 0.0;  // reference extent along y (the x-edges' length)
  std::vector<Real> steps;
  VecX fx, fy;  // per-step resultant forces on the x-max / y-max edges
  std::array<EdgeCondition, 4> edges;

  int n_steps() const { return static_cast<int>(steps.size()); }
  const EdgeCondition& edge(EdgeId e) const { return edges[static_cast<int>(e)]; }
  EdgeCondition& edge(EdgeId e) { return edges[static_cast<int>(e)]; }

  void validate(const Grid2D* grid = nullptr) const;

  // Average boundary stress of step j: P_ave = diag(fx / length_y, fy / length_x).
  Mat2 average_stress(int j) const;

  // Uniform traction target on an edge at step j, from the resultants.
  Vec2 uniform_traction(EdgeId e, int j) const;

  // Largest |entry| of the average stress over all steps -- used as the
  // stress normalization scale during training.
  Real max_average_stress() const;
};

// Trapezoid-rule mean of nodal values over the grid, one result per column;
// exact for bilinear fields.
VecX spatial_average(const Grid2D& grid, const MatX& values);

// Trapezoid-rule resultant force on an edge from nodal stress rows
// (components P11, P12, P21, P22) ordered like edge_node_indices().
Vec2 edge_resultant(const Grid2D& grid, EdgeId e, const MatX& P_edge);

}  // namespace hf
