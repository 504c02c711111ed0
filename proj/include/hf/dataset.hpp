// One loading experiment: full-field kinematic snapshots on a structured
// grid plus the boundary force record.  Several datasets of the same
// specimen (different loading programs) can be identified jointly; they then
// share one material field but keep their own interpolants and boundary
// data.
#pragma once

#include <cmath>
#include <string>

#include "hf/boundary.hpp"
#include "hf/kinematics.hpp"
#include "hf/types.hpp"

namespace hf {

struct Dataset {
  std::string name = "dataset";
  Grid2D grid;
  LiftMode lift = LiftMode::IncompressiblePlaneStress;
  FieldSnapshotSeries displacement;  // 2 components; may be empty if only F was measured
  FieldSnapshotSeries defgrad;       // 4 components, required
  BoundaryData boundary;

  void validate() const {
    grid.validate();
    defgrad.validate();
    if (defgrad.components != 4)
      throw DimensionError("Dataset: deformation-gradient series needs 4 components");
    if (defgrad.grid.nx != grid.nx || defgrad.grid.ny != grid.ny)
      throw DimensionError("Dataset: deformation-gradient grid mismatch");
    if (!displacement.values.empty()) {
      displacement.validate();
      if (displacement.components != 2)
        throw DimensionError("Dataset: displacement series needs 2 components");
      if (displacement.steps != defgrad.steps)
        throw DataError("Dataset: displacement and deformation-gradient steps differ");
    }
    boundary.validate(&grid);
    if (boundary.steps != defgrad.steps)
      throw DataError("Dataset: boundary and field load steps differ");
    const Real tol = 1e-9;
    if (std::abs(boundary.length_x - grid.length_x()) > tol * (1.0 + grid.length_x()) ||
        std::abs(boundary.length_y - grid.length_y()) > tol * (1.0 + grid.length_y()))
      throw DataError("Dataset: boundary edge lengths do not match the grid extent");
  }
};

}  // namespace hf
