#include "hf/materials.hpp"

#include <cmath>

namespace hf {

namespace {

Real checked_det(const Mat3& F) {
  const Real J = F.determinant();
  if (!(J > 0.0))
    throw InvertedElementError("material evaluation: det F = " + std::to_string(J) +
                               " is not positive");
  return J;
}

}  // namespace

void NeoHookeanMaterial::validate() const {
  if (!(mu > 0) || !(kappa_bulk > 0))
    throw ConfigurationError("NeoHookeanMaterial: mu and kappa_bulk must be positive");
}

Vec3 GohMaterial::fiber() const {
  return Vec3(std::cos(fiber_angle), std::sin(fiber_angle), 0.0);
}

void GohMaterial::validate() const {
  if (!(mu > 0) || !(k1 >= 0) || !(k2 > 0) || !(kappa_bulk > 0))
    throw ConfigurationError("GohMaterial: mu, k2, kappa_bulk must be positive and k1 >= 0");
  if (!(kappa_disp >= 0.0 && kappa_disp <= 1.0 / 3.0))
    throw ConfigurationError("GohMaterial: kappa_disp must lie in [0, 1/3]");
}

Real neo_hookean_energy(const Mat3& F, Real mu, Real kappa_bulk) {
  const Real J = checked_det(F);
  const Real I1 = (F.transpose() * F).trace();
  const Real lnJ = std::log(J);
  return 0.5 * mu * (I1 - 3.0) - mu * lnJ + 0.5 * kappa_bulk * lnJ * lnJ;
}

Mat3 neo_hookean_pk1(const Mat3& F, Real mu, Real kappa_bulk) {
  const Real J = checked_det(F);
  const Mat3 Fit = F.inverse().transpose();
  return mu * (F - Fit) + kappa_bulk * std::log(J) * Fit;
}

Real goh_energy(const Mat3& F, const GohMaterial& m) {
  Real psi = neo_hookean_energy(F, m.mu, m.kappa_bulk);
  const Mat3 C = F.transpose() * F;
  const Vec3 a0 = m.fiber();
  const Real I1 = C.trace();
  const Real I4 = a0.dot(C * a0);
  const Real E = m.kappa_disp * (I1 - 3.0) + (1.0 - 3.0 * m.kappa_disp) * (I4 - 1.0);
  if (E > 0.0) psi += m.k1 / (2.0 * m.k2) * (std::exp(m.k2 * E * E) - 1.0);
  return psi;
}

Mat3 goh_pk1(const Mat3& F, const GohMaterial& m) {
  Mat3 P = neo_hookean_pk1(F, m.mu, m.kappa_bulk);
  const Mat3 C = F.transpose() * F;
  const Vec3 a0 = m.fiber();
  const Real I1 = C.trace();
  const Real I4 = a0.dot(C * a0);
  const Real E = m.kappa_disp * (I1 - 3.0) + (1.0 - 3.0 * m.kappa_disp) * (I4 - 1.0);
  if (E > 0.0) {
    // dI1/dF = 2F, dI4/dF = 2 (F a0) a0^T
    const Real scale = m.k1 * E * std::exp(m.k2 * E * E);
    P += scale * (2.0 * m.kappa_disp * F +
                  2.0 * (1.0 - 3.0 * m.kappa_disp) * (F * a0) * a0.transpose());
  }
  return P;
}

Real Material::energy(const Mat3& F) const {
  if (const auto* nh = std::get_if<NeoHookeanMaterial>(&model))
    return neo_hookean_energy(F, nh->mu, nh->kappa_bulk);
  return goh_energy(F, std::get<GohMaterial>(model));
}

Mat3 Material::pk1(const Mat3& F) const {
  if (const auto* nh = std::get_if<NeoHookeanMaterial>(&model))
    return neo_hookean_pk1(F, nh->mu, nh->kappa_bulk);
  return goh_pk1(F, std::get<GohMaterial>(model));
}

Real Material::shear_modulus() const {
  if (const auto* nh = std::get_if<NeoHookeanMaterial>(&model)) return nh->mu;
  return std::get<GohMaterial>(model).mu;
}

void Material::validate() const {
  if (const auto* nh = std::get_if<NeoHookeanMaterial>(&model))
    nh->validate();
  else
    std::get<GohMaterial>(model).validate();
}

void PhaseMap::validate(const Grid2D& grid) const {
  grid.validate();
  const int n_el = (grid.nx - 1) * (grid.ny - 1);
  if (static_cast<int>(element_label.size()) != n_el)
    throw DimensionError("PhaseMap: expected one label per element (" +
                         std::to_string(n_el) + "), got " +
                         std::to_string(element_label.size()));
  if (materials.empty()) throw ConfigurationError("PhaseMap: no materials defined");
  for (int lbl : element_label)
    if (lbl < 0 || lbl >= static_cast<int>(materials.size()))
      throw ConfigurationError("PhaseMap: element label " + std::to_string(lbl) +
                               " has no material");
  for (const Material& m : materials) m.validate();
}

}  // namespace hf
