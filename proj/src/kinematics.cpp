#include "hf/kinematics.hpp"

namespace hf {

FieldSnapshotSeries central_diff_defgrad(const FieldSnapshotSeries& u) {
  u.validate();
  if (u.components != 2)
    throw DimensionError("central_diff_defgrad: expected 2 displacement components, got " +
                         std::to_string(u.components));
  const Grid2D& g = u.grid;
  g.validate();  // nx, ny >= 3 needed by the one-sided stencils

  FieldSnapshotSeries f;
  f.grid = g;
  f.steps = u.steps;
  f.components = 4;
  f.values.reserve(u.values.size());

  const Real hx = g.spacing[0], hy = g.spacing[1];
  for (const MatX& uj : u.values) {
    MatX fj(g.size(), 4);
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        const int i = g.index(ix, iy);
        for (int comp = 0; comp < 2; ++comp) {
          const Real dudx = line_derivative(
              [&](int k) { return uj(g.index(k, iy), comp); }, ix, g.nx, hx);
          const Real dudy = line_derivative(
              [&](int k) { return uj(g.index(ix, k), comp); }, iy, g.ny, hy);
          // F = I + grad u, row `comp` of the in-plane tensor
          fj(i, 2 * comp + 0) = (comp == 0 ? 1.0 : 0.0) + dudx;
          fj(i, 2 * comp + 1) = (comp == 1 ? 1.0 : 0.0) + dudy;
        }
      }
    }
    f.values.push_back(std::move(fj));
  }
  return f;
}

const char* to_string(LiftMode m) {
  return m == LiftMode::IncompressiblePlaneStress ? "incompressible_plane_stress"
                                                  : "plane_strain";
}

LiftMode lift_mode_from_string(const std::string& s) {
  if (s == "incompressible_plane_stress") return LiftMode::IncompressiblePlaneStress;
  if (s == "plane_strain") return LiftMode::PlaneStrain;
  throw ConfigurationError("unknown lift mode: " + s);
}

}  // namespace hf
