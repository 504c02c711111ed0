// Reference hyperelastic materials for the synthetic data generator: a
// compressible neo-Hookean solid and a Gasser-Ogden-Holzapfel (GOH) fiber
// composite with a tension-only fiber term.  Both work on the full 3x3
// deformation gradient; the plane-strain solver passes F with F33 = 1.
#pragma once

#include <variant>

#include "hf/types.hpp"

namespace hf {

// psi = mu/2 (I1 - 3) - mu ln J + kappa_bulk/2 (ln J)^2
struct NeoHookeanMaterial {
  Real mu = 1.0;
  Real kappa_bulk = 100.0;  // default near-incompressible (100 mu for mu = 1)

  void validate() const;
};

// psi = neo-Hookean part + k1/(2 k2) (exp(k2 E^2) - 1) with the dispersed
// fiber strain E = kappa_disp (I1 - 3) + (1 - 3 kappa_disp)(I4 - 1); the
// fiber term only engages in tension (E > 0).
struct GohMaterial {
  Real mu = 1.0;
  Real k1 = 2.0;
  Real k2 = 1.0;
  Real kappa_disp = 0.1;   // dispersion in [0, 1/3]
  Real fiber_angle = 0.0;  // in-plane angle from the x-axis, radians
  Real kappa_bulk = 100.0;

  Vec3 fiber() const;
  void validate() const;
};

Real neo_hookean_energy(const Mat3& F, Real mu, Real kappa_bulk);
Mat3 neo_hookean_pk1(const Mat3& F, Real mu, Real kappa_bulk);

Real goh_energy(const Mat3& F, const GohMaterial& m);
Mat3 goh_pk1(const Mat3& F, const GohMaterial& m);

// One phase of a heterogeneous plate: either reference model.
struct Material {
  std::variant<NeoHookeanMaterial, GohMaterial> model = NeoHookeanMaterial{};

  Real energy(const Mat3& F) const;
  Mat3 pk1(const Mat3& F) const;
  Real shear_modulus() const;  // ground-truth stiffness for map comparisons
  void validate() const;
};

// Per-element material labels over the elements of a structured grid
// ((nx-1) x (ny-1) quads, element (ex, ey) at index ey*(nx-1)+ex).
struct PhaseMap {
  std::vector<int> element_label;
  std::vector<Material> materials;

  const Material& at_element(int e) const { return materials[element_label[e]]; }
  void validate(const Grid2D& grid) const;
};

// Labels every element by evaluating `label_of` at the element center.
template <typename Fn>
PhaseMap phase_map_from_labeler(const Grid2D& grid, std::vector<Material> mats,
                                Fn&& label_of) {
  PhaseMap pm;
  pm.materials = std::move(mats);
  const int nex = grid.nx - 1, ney = grid.ny - 1;
  pm.element_label.resize(nex * ney);
  for (int ey = 0; ey < ney; ++ey)
    for (int ex = 0; ex < nex; ++ex) {
      const Vec2 center = grid.origin + Vec2((ex + 0.5) * grid.spacing[0],
                                             (ey + 0.5) * grid.spacing[1]);
      pm.element_label[ey * nex + ex] = label_of(center);
    }
  pm.validate(grid);
  return pm;
}

}  // namespace hf
