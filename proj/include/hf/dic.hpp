// Import of full-field measurement exports (e.g. digital image correlation)
// into a Dataset.  Two CSV files are expected:
//
//   displacements: header "frame,X1,X2,u1,u2", one row per measured point
//     per frame.  Points must lie on a rectangular grid with uniform spacing;
//     the grid is inferred from the union of all frames.  Per frame, a small
//     fraction of grid points may be missing (dropouts); they are filled by
//     iterative neighbor averaging.  A larger fraction aborts with a report
//     of the gaps.
//   frames: header "frame,stretch,fx,fy", one row per frame with the load
//     parameter (grip stretch, strictly increasing) and the measured force
//     resultants on the x-max / y-max grips (tension positive).
//
// Deformation gradients are computed from the filled displacement fields by
// central differences (one-sided at the boundary).  Edge conditions follow
// the loading mode: actuated grip pairs are excluded from the traction data,
// free edges carry exact zero tractions.
#pragma once

#include <string>
#include <vector>

#include "hf/dataset.hpp"
#include "hf/types.hpp"

namespace hf {

struct CropRect {
  Real x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(Real x, Real y, Real tol) const {
    return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
  }
};

struct DicIngestConfig {
  std::string name = "dic";
  LiftMode lift = LiftMode::IncompressiblePlaneStress;
  // Which grips are actuated: "uniaxial-x", "uniaxial-y" or "equibiaxial".
  std::string loading_mode = "uniaxial-x";
  // Keep the frames whose stretch is nearest to each target; empty keeps all
  // frames with stretch > 1.
  std::vector<Real> target_stretches;
  // Optional region of interest in reference coordinates.
  bool crop = false;
  CropRect crop_rect;
  // Largest tolerated fraction of missing grid points per frame.
  Real max_missing_fraction = 0.02;

  void validate() const;
};

Dataset ingest_dic(const std::string& displacements_csv, const std::string& frames_csv,
                   const DicIngestConfig& cfg);

}  // namespace hf
