#include <cmath>

#include "doctest.h"
#include "hf/constitutive.hpp"
#include "hf/kinematics.hpp"
#include "hf/rng.hpp"

using namespace hf;

namespace {

NodeModelSpec default_spec() {
  NodeModelSpec spec;
  spec.terms = default_registry();
  return spec;
}

// Deterministic pseudo-random parameters reproducible across languages.
VecX pseudo_params(int n) {
  VecX p(n);
  for (int i = 0; i < n; ++i) p[i] = ((i * 7919) % 101 - 50) / 100.0;
  return p;
}

MaterialPointModel random_model(Rng& rng, Real scale = 0.4) {
  MaterialPointModel m(default_spec());
  std::normal_distribution<Real> dist(0.0, scale);
  for (int i = 0; i < m.theta.size(); ++i) m.theta[i] = dist(rng);
  return m;
}

Mat3 random_deformation(Rng& rng, Real amp = 0.15) {
  std::uniform_real_distribution<Real> dist(-amp, amp);
  Mat3 F = Mat3::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) F(r, c) += dist(rng);
  if (F.determinant() <= 0.2) F = Mat3::Identity() + 0.05 * Mat3::Random();
  return F;
}

}  // namespace

TEST_CASE("default registry layout") {
  const NodeModelSpec spec = default_spec();
  REQUIRE(spec.n_terms() == 11);
  CHECK(spec.terms[0].name() == "I1");
  CHECK(spec.terms[3].name() == "I4w");
  CHECK(spec.terms[4].name() == "mix(I1,I2)");
  CHECK(spec.terms[9].name() == "mix(I4v,I4w)");
  CHECK(spec.terms[10].name() == "J");
  CHECK(spec.params_per_flow() == 53);
  CHECK(spec.n_params() == 583);
  CHECK(spec.term_offset(2) == 106);
  spec.validate();

  NodeModelSpec bad = spec;
  bad.flow_widths = {1, 4, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad = spec;
  bad.dirs.v = Vec3(1.0, 1.0, 0.0);
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
}

TEST_CASE("scalar flow matches an independent reference integration") {
  const NodeModelSpec spec = default_spec();
  const VecX theta = pseudo_params(spec.params_per_flow());
  CHECK(node_flow(spec, theta, 0.3) == doctest::Approx(-0.2119819316049439).epsilon(1e-13));
  CHECK(node_flow(spec, theta, 0.0) == doctest::Approx(-0.5236484436524494).epsilon(1e-13));
  CHECK(potential_derivative(spec, theta, 0.3) ==
        doctest::Approx(0.3116665120475055).epsilon(1e-12));
}

TEST_CASE("flow with zero weights and constant bias is the identity shift") {
  // rhs == c everywhere, so the flow map is y + c and the baseline removes c.
  NodeModelSpec spec = default_spec();
  VecX theta = VecX::Zero(spec.params_per_flow());
  theta[spec.params_per_flow() - 1] = 0.7;  // output bias
  CHECK(node_flow(spec, theta, 0.25) == doctest::Approx(0.95).epsilon(1e-14));
  CHECK(potential_derivative(spec, theta, 0.25) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(potential_derivative(spec, theta, 0.0) == 0.0);
}

TEST_CASE("flow response is strictly monotone in its input") {
  const NodeModelSpec spec = default_spec();
  Rng rng(stage_seed(99, "monotone"));
  std::normal_distribution<Real> par(0.0, 0.8);
  std::uniform_real_distribution<Real> pts(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    VecX theta(spec.params_per_flow());
    for (int i = 0; i < theta.size(); ++i) theta[i] = par(rng);
    for (int rep = 0; rep < 50; ++rep) {
      Real a = pts(rng), b = pts(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(potential_derivative(spec, theta, a) < potential_derivative(spec, theta, b));
    }
  }
}

TEST_CASE("stress vanishes in the reference configuration") {
  Rng rng(stage_seed(7, "ref-state"));
  const MaterialPointModel m = random_model(rng);
  const Mat3 P = pk1_stress(m, Mat3::Identity());
  CHECK(P.norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(strain_energy(m, Mat3::Identity()) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("stress is the exact gradient of the stored energy") {
  Rng rng(stage_seed(7, "energy-grad"));
  for (int trial = 0; trial < 3; ++trial) {
    const MaterialPointModel m = random_model(rng);
    const Mat3 F = random_deformation(rng);
    const Mat3 P = pk1_stress(m, F);
    const Real h = 1e-5;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        Mat3 Fp = F, Fm = F;
        Fp(r, c) += h;
        Fm(r, c) -= h;
        const Real fd = (strain_energy(m, Fp) - strain_energy(m, Fm)) / (2 * h);
        CHECK(P(r, c) == doctest::Approx(fd).epsilon(2e-6));
      }
  }
}

TEST_CASE("energy is frame indifferent and stress rotates accordingly") {
  Rng rng(stage_seed(7, "frame"));
  const MaterialPointModel m = random_model(rng);
  const Mat3 F = random_deformation(rng);
  const Real ang = 0.6;
  Mat3 R;
  R << std::cos(ang), -std::sin(ang), 0, std::sin(ang), std::cos(ang), 0, 0, 0, 1;
  CHECK(strain_energy(m, R * F) == doctest::Approx(strain_energy(m, F)).epsilon(1e-10));
  const Mat3 PR = pk1_stress(m, R * F);
  const Mat3 RP = R * pk1_stress(m, F);
  CHECK((PR - RP).norm() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("P F^T stays symmetric (balance of angular momentum)") {
  Rng rng(stage_seed(7, "pft"));
  for (int trial = 0; trial < 3; ++trial) {
    const MaterialPointModel m = random_model(rng);
    const Mat3 F = random_deformation(rng);
    const Mat3 M = pk1_stress(m, F) * F.transpose();
    CHECK((M - M.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("in-plane stress includes the thickness-relief chain term") {
  Rng rng(stage_seed(7, "inplane"));
  const MaterialPointModel m = random_model(rng);
  Mat2 F2;
  F2 << 1.08, 0.07, -0.04, 0.96;

  for (LiftMode mode : {LiftMode::IncompressiblePlaneStress, LiftMode::PlaneStrain}) {
    const Mat2 P2 = pk1_stress_inplane(m, F2, mode);
    const Real h = 1e-5;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        Mat2 Fp = F2, Fm = F2;
        Fp(r, c) += h;
        Fm(r, c) -= h;
        const Real fd = (strain_energy(m, lift_plane<Real>(Fp, mode)) -
                         strain_energy(m, lift_plane<Real>(Fm, mode))) /
                        (2 * h);
        CHECK(P2(r, c) == doctest::Approx(fd).epsilon(2e-6));
      }
  }
}

TEST_CASE("term registry names round-trip") {
  for (const TermSpec& t : default_registry()) {
    CHECK(!t.name().empty());
    if (!t.mixed) CHECK(invariant_from_string(to_string(t.first)) == t.first);
  }
}
