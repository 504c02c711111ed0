// Plane-strain finite-element forward solver on the structured grid:
// bilinear quadrilaterals, 2x2 Gauss quadrature, Newton iteration with load
// sub-stepping.  Produces the nodal displacement and deformation-gradient
// series plus boundary force data in the exact form the inverse side consumes.
#pragma once

#include <string>
#include <vector>

#include "hf/boundary.hpp"
#include "hf/materials.hpp"
#include "hf/types.hpp"

namespace hf {

enum class LoadingMode { Equibiaxial, UniaxialX, UniaxialY };

const char* to_string(LoadingMode m);
LoadingMode loading_mode_from_string(const std::string& s);

// Stretch-controlled loading: the gripped edges move affinely to stretch
// lambda about the domain center; remaining edges are traction-free.
// Equibiaxial grips all four edges, the uniaxial modes grip one opposite
// pair (clamped transversely).
struct LoadingProgram {
  LoadingMode mode = LoadingMode::Equibiaxial;
  std::vector<Real> lambda_steps;

  void validate() const;
};

struct ForwardOptions {
  Real newton_tol = 1e-9;  // residual norm per load step
  int max_newton_iter = 30;
  int max_bisections = 6;  // load sub-stepping depth before giving up
};

struct ForwardResult {
  FieldSnapshotSeries displacement;  // (u1, u2)
  FieldSnapshotSeries defgrad;       // (F11, F12, F21, F22), nodal recovery
  BoundaryData boundary;             // resultants + per-node edge tractions

  // Reaction-force sums per edge (one m x 2 matrix per edge, corner nodes
  // contribute to both edges meeting there).  Gripped opposite pairs balance
  // to solver tolerance.
  std::array<MatX, 4> edge_reactions;

  const MatX& reactions(EdgeId e) const {
    return edge_reactions[static_cast<int>(e)];
  }
};

ForwardResult solve_forward(const Grid2D& grid, const PhaseMap& phases,
                            const LoadingProgram& program,
                            const ForwardOptions& opts = {});

}  // namespace hf
