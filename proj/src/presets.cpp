#include "hf/presets.hpp"

#include <cmath>

namespace hf {

namespace {

Material nh(Real mu, Real kappa_bulk) {
  NeoHookeanMaterial m;
  m.mu = mu;
  m.kappa_bulk = kappa_bulk;
  return Material{m};
}

Material goh(Real mu, Real k1, Real k2, Real kappa_disp, Real angle, Real kappa_bulk) {
  GohMaterial m;
  m.mu = mu;
  m.k1 = k1;
  m.k2 = k2;
  m.kappa_disp = kappa_disp;
  m.fiber_angle = angle;
  m.kappa_bulk = kappa_bulk;
  return Material{m};
}

// Blocky letter P covering half of the unit square: a wide stem plus a bowl
// with a rectangular hole.  The 50% area split puts the median of a
// two-phase stiffness map into the gap between the phases, which is what the
// mask-agreement evaluation thresholds on.
bool inside_p_glyph(const Vec2& X) {
  const Real x = X[0], y = X[1];
  const bool stem = x >= 0.10 && x <= 0.44 && y >= 0.08 && y <= 0.92;
  const bool bowl = x >= 0.44 && x <= 0.90 && y >= 0.36 && y <= 0.92;
  const bool hole = x >= 0.58 && x <= 0.76 && y >= 0.52 && y <= 0.76;
  return stem || (bowl && !hole);
}

// Annulus centered in the unit square, ~51% of the area.
bool inside_ring(const Vec2& X) {
  const Real r = (X - Vec2(0.5, 0.5)).norm();
  return r >= 0.20 && r <= 0.45;
}

bool inside_ellipse(const Vec2& X) {
  const Real ex = (X[0] - 0.5) / 0.35;
  const Real ey = (X[1] - 0.5) / 0.25;
  return ex * ex + ey * ey <= 1.0;
}

bool inside_square(const Vec2& X) {
  return X[0] >= 0.35 && X[0] <= 0.65 && X[1] >= 0.35 && X[1] <= 0.65;
}

TrainerConfig desk_trainer() {
  TrainerConfig cfg;
  cfg.interp.n_freq = 8;
  cfg.interp.sigma_ff = 2.0;
  cfg.interp.hidden = {40, 40};
  cfg.interp.epochs = 6000;
  cfg.interp.learning_rate = 2e-3;
  cfg.hyper.n_freq = 8;
  cfg.hyper.sigma_ff = 3.0;
  cfg.hyper.hidden = {40, 40};
  cfg.budgets = {3000, 400, 400, 2500};
  cfg.lr_homogeneous = 5e-2;
  cfg.lr_distill = 1e-3;
  cfg.lr_uniform = 2e-3;
  cfg.lr_main = 2e-3;
  cfg.rebalance = true;
  cfg.seed = 1;
  return cfg;
}

TrainerConfig full_trainer() {
  TrainerConfig cfg = desk_trainer();
  cfg.interp.n_freq = 16;
  cfg.interp.sigma_ff = 3.0;
  cfg.interp.epochs = 12000;
  cfg.hyper.n_freq = 12;
  cfg.hyper.sigma_ff = 4.0;
  cfg.budgets = {4000, 600, 800, 8000};
  return cfg;
}

TrainerConfig smoke_trainer() {
  TrainerConfig cfg;
  cfg.interp.n_freq = 2;
  cfg.interp.sigma_ff = 0.5;
  cfg.interp.hidden = {16};
  cfg.interp.epochs = 1500;
  cfg.interp.learning_rate = 3e-3;
  cfg.hyper.n_freq = 3;
  cfg.hyper.sigma_ff = 1.5;
  cfg.hyper.hidden = {12};
  cfg.budgets = {600, 80, 80, 250};
  cfg.lr_homogeneous = 5e-2;
  cfg.lr_main = 2e-3;
  cfg.rebalance = true;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

const std::vector<Real>& standard_lambda_steps() {
  static const std::vector<Real> steps = {1.05544, 1.07795, 1.10065, 1.12326, 1.14587};
  return steps;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "homogeneous", "smoke",     "p-inclusion", "p-inclusion-desk", "ring",
      "ring-desk",   "ring-multi", "ring-desk-multi", "ellipse",     "ellipse-desk"};
  return names;
}

Preset make_preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.lambda_steps = standard_lambda_steps();
  p.programs = {LoadingMode::Equibiaxial};
  p.elements = 50;
  p.trainer = full_trainer();

  const bool desk = name.size() > 5 && name.find("-desk") != std::string::npos;
  if (desk) {
    p.elements = 25;
    p.trainer = desk_trainer();
  }

  // Bulk moduli scale with the shear modulus so the stiffness-map contrast
  // between the phases matches the shear-modulus contrast.
  if (name == "homogeneous") {
    p.description = "uniform neo-Hookean plate, equibiaxial stretching";
    p.elements = 25;
    p.trainer = desk_trainer();
    p.materials = {nh(1.0, 100.0)};
    p.label_of = [](const Vec2&) { return 0; };
  } else if (name == "smoke") {
    p.description = "tiny two-phase plate for end-to-end pipeline checks";
    p.elements = 8;
    p.trainer = smoke_trainer();
    p.lambda_steps = {1.05, 1.1};
    p.materials = {nh(1.0, 100.0), nh(2.0, 200.0)};
    p.label_of = [](const Vec2& X) { return inside_square(X) ? 1 : 0; };
  } else if (name == "p-inclusion" || name == "p-inclusion-desk") {
    p.description = "stiff letter-P inclusion (shear modulus 2) in a softer "
                    "neo-Hookean matrix (1), equibiaxial stretching";
    p.materials = {nh(1.0, 100.0), nh(2.0, 200.0)};
    p.label_of = [](const Vec2& X) { return inside_p_glyph(X) ? 1 : 0; };
  } else if (name == "ring" || name == "ring-desk" || name == "ring-multi" ||
             name == "ring-desk-multi") {
    p.description = "stiff fiber-reinforced ring in a fiber-reinforced matrix";
    p.materials = {goh(1.0, 2.0, 1.0, 0.1, 0.0, 100.0),
                   goh(2.0, 4.0, 1.0, 0.1, 0.0, 200.0)};
    p.label_of = [](const Vec2& X) { return inside_ring(X) ? 1 : 0; };
    p.noise_sigma = 0.0007;
    if (name == "ring-multi" || name == "ring-desk-multi")
      p.programs = {LoadingMode::Equibiaxial, LoadingMode::UniaxialX,
                    LoadingMode::UniaxialY};
  } else if (name == "ellipse" || name == "ellipse-desk") {
    p.description = "anisotropic elliptical inclusion (fibers along x) in an "
                    "isotropic matrix, probed by two uniaxial programs";
    p.materials = {nh(1.0, 100.0), goh(1.0, 5.0, 1.0, 0.05, 0.0, 100.0)};
    p.label_of = [](const Vec2& X) { return inside_ellipse(X) ? 1 : 0; };
    p.programs = {LoadingMode::UniaxialX, LoadingMode::UniaxialY};
  } else {
    std::string all;
    for (const std::string& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
    throw ConfigurationError("unknown preset '" + name + "' (available: " + all + ")");
  }
  return p;
}

}  // namespace hf
