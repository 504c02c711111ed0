#include <cmath>

#include "doctest.h"
#include "hf/forward_fem.hpp"
#include "hf/materials.hpp"
#include "hf/noise.hpp"
#include "hf/rng.hpp"

using namespace hf;

namespace {

Mat2 general_F2() {
  Mat2 F;
  F << 1.1, 0.2, -0.05, 0.95;
  return F;
}

Mat3 plane_strain(const Mat2& F2) {
  Mat3 F = Mat3::Identity();
  F.topLeftCorner<2, 2>() = F2;
  return F;
}

// Central finite differences of an energy functional.
template <typename Psi>
Mat3 fd_pk1(Psi&& psi, const Mat3& F, Real h = 1e-6) {
  Mat3 P;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Mat3 Fp = F, Fm = F;
      Fp(r, c) += h;
      Fm(r, c) -= h;
      P(r, c) = (psi(Fp) - psi(Fm)) / (2.0 * h);
    }
  return P;
}

Mat3 random_F3(Rng& rng) {
  for (;;) {
    const MatX n = normal_matrix(rng, 3, 3, 0.12);
    const Mat3 F = Mat3::Identity() + Mat3(n);
    if (F.determinant() > 0.35) return F;
  }
}

}  // namespace

TEST_CASE("materials: neo-Hookean stress values and energy consistency") {
  CHECK(neo_hookean_pk1(Mat3::Identity(), 1.3, 7.0).cwiseAbs().maxCoeff() == 0.0);

  const Mat3 Fb = plane_strain(Mat2::Identity() * 1.1);
  CHECK(neo_hookean_pk1(Fb, 1.0, 1.0)(0, 0) ==
        doctest::Approx(0.36420032691695453).epsilon(1e-12));

  const Mat3 Fg = plane_strain(general_F2());
  const Mat3 P = neo_hookean_pk1(Fg, 1.0, 1.0);
  CHECK(P(0, 0) == doctest::Approx(0.24773813135699374).epsilon(1e-10));
  CHECK(P(0, 1) == doctest::Approx(0.1551441121766839).epsilon(1e-10));
  CHECK(P(1, 0) == doctest::Approx(0.12942355129326452).epsilon(1e-10));
  CHECK(P(1, 1) == doctest::Approx(-0.0368295321129549).epsilon(1e-8));

  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 F = random_F3(rng);
    const Mat3 Pa = neo_hookean_pk1(F, 0.8, 5.0);
    const Mat3 Pn = fd_pk1([](const Mat3& Fx) { return neo_hookean_energy(Fx, 0.8, 5.0); }, F);
    CHECK((Pa - Pn).cwiseAbs().maxCoeff() / Pa.cwiseAbs().maxCoeff() < 1e-6);
  }

  Mat3 bad = Mat3::Identity();
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(neo_hookean_pk1(bad, 1.0, 1.0), InvertedElementError);
}

TEST_CASE("materials: GOH fiber model") {
  GohMaterial m;
  m.mu = 1.0;
  m.kappa_bulk = 10.0;
  m.k1 = 2.0;
  m.k2 = 1.0;
  m.kappa_disp = 0.1;

  CHECK(goh_pk1(Mat3::Identity(), m).cwiseAbs().maxCoeff() == 0.0);

  const Mat3 Fg = plane_strain(general_F2());
  const Mat3 P = goh_pk1(Fg, m);
  CHECK(P(0, 0) == doctest::Approx(1.2756166547778225).epsilon(1e-9));
  CHECK(P(0, 1) == doctest::Approx(0.19148072289559837).epsilon(1e-8));
  CHECK(P(1, 0) == doctest::Approx(0.01107574191389071).epsilon(1e-6));
  CHECK(P(1, 1) == doctest::Approx(0.5297126895870141).epsilon(1e-9));
  CHECK(P(2, 2) == doctest::Approx(0.6029042531677242).epsilon(1e-9));

  GohMaterial rot = m;
  rot.fiber_angle = 0.3;
  const Mat3 Pr = goh_pk1(Fg, rot);
  CHECK(Pr(0, 0) == doctest::Approx(1.4528923594492316).epsilon(1e-9));
  CHECK(Pr(0, 1) == doctest::Approx(0.4038623202043401).epsilon(1e-9));
  CHECK(Pr(1, 0) == doctest::Approx(0.17453674275996756).epsilon(1e-8));
  CHECK(Pr(1, 1) == doctest::Approx(0.5951708463708405).epsilon(1e-9));

  // k1 = 0 removes the fiber term entirely.
  GohMaterial iso = m;
  iso.k1 = 0.0;
  CHECK((goh_pk1(Fg, iso) - neo_hookean_pk1(Fg, m.mu, m.kappa_bulk))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Energy consistency across the tension switch.
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 F = random_F3(rng);
    const Mat3 Pa = goh_pk1(F, m);
    const Mat3 Pn = fd_pk1([&](const Mat3& Fx) { return goh_energy(Fx, m); }, F);
    CHECK((Pa - Pn).cwiseAbs().maxCoeff() / Pa.cwiseAbs().maxCoeff() < 1e-6);
  }

  // Stretching along the fiber is markedly stiffer than across it.
  const Mat3 Fx = plane_strain(Vec2(1.1, 1.0).asDiagonal().toDenseMatrix());
  const Mat3 Fy = plane_strain(Vec2(1.0, 1.1).asDiagonal().toDenseMatrix());
  CHECK(goh_pk1(Fx, m)(0, 0) > 1.2 * goh_pk1(Fy, m)(1, 1));

  GohMaterial badm = m;
  badm.kappa_disp = 0.5;
  CHECK_THROWS_AS(badm.validate(), ConfigurationError);
}

TEST_CASE("materials: phase map labeling and validation") {
  const Grid2D grid = Grid2D::unit_square(5, 4);
  Material soft, stiff;
  soft.model = NeoHookeanMaterial{1.0, 10.0};
  stiff.model = NeoHookeanMaterial{2.0, 20.0};
  const PhaseMap pm = phase_map_from_labeler(
      grid, {soft, stiff},
      [](const Vec2& X) { return X[0] > 0.5 ? 1 : 0; });
  CHECK(pm.element_label.size() == 12);
  CHECK(pm.at_element(0).shear_modulus() == 1.0);
  CHECK(pm.at_element(3).shear_modulus() == 2.0);

  PhaseMap bad = pm;
  bad.element_label[0] = 7;
  CHECK_THROWS_AS(bad.validate(grid), ConfigurationError);
  bad = pm;
  bad.element_label.pop_back();
  CHECK_THROWS_AS(bad.validate(grid), DimensionError);
}

TEST_CASE("forward: homogeneous patch test under equibiaxial stretch") {
  const Grid2D grid = Grid2D::unit_square(9, 9);
  Material mat;
  mat.model = NeoHookeanMaterial{1.0, 1.0};
  const PhaseMap pm =
      phase_map_from_labeler(grid, {mat}, [](const Vec2&) { return 0; });
  LoadingProgram prog;
  prog.mode = LoadingMode::Equibiaxial;
  prog.lambda_steps = {1.05, 1.1, 1.15};
  const ForwardResult res = solve_forward(grid, pm, prog);

  const Real P11[3] = {0.1905526936560611, 0.36420032691695453, 0.523499030217667};
  for (int j = 0; j < 3; ++j) {
    const Real lam = prog.lambda_steps[j];
    for (int i = 0; i < grid.size(); ++i) {
      CHECK(res.defgrad.values[j](i, 0) == doctest::Approx(lam).epsilon(1e-9));
      CHECK(res.defgrad.values[j](i, 3) == doctest::Approx(lam).epsilon(1e-9));
      CHECK(std::abs(res.defgrad.values[j](i, 1)) < 1e-9);
      CHECK(std::abs(res.defgrad.values[j](i, 2)) < 1e-9);
    }
    CHECK(res.boundary.fx[j] == doctest::Approx(P11[j]).epsilon(1e-6));
    CHECK(res.boundary.fy[j] == doctest::Approx(P11[j]).epsilon(1e-6));
    // Per-node tractions on the pulled edge are the uniform (P11, 0).
    const MatX& t = res.boundary.edge(EdgeId::XMax).per_node[j];
    for (int q = 0; q < t.rows(); ++q) {
      CHECK(t(q, 0) == doctest::Approx(P11[j]).epsilon(1e-6));
      CHECK(std::abs(t(q, 1)) < 1e-6);
    }
  }
}

TEST_CASE("forward: near-zero loading produces a near-zero state") {
  const Grid2D grid = Grid2D::unit_square(6, 6);
  Material mat;
  mat.model = NeoHookeanMaterial{1.0, 10.0};
  const PhaseMap pm =
      phase_map_from_labeler(grid, {mat}, [](const Vec2&) { return 0; });
  LoadingProgram prog;
  prog.lambda_steps = {1.0 + 1e-9};
  const ForwardResult res = solve_forward(grid, pm, prog);
  CHECK(res.displacement.values[0].cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(res.boundary.fx[0]) < 1e-6);

  LoadingProgram bad;
  bad.lambda_steps = {1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
  bad.lambda_steps = {1.1, 1.05};
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
}

TEST_CASE("forward: uniaxial stretch balances opposite grips") {
  const Grid2D grid = Grid2D::unit_square(9, 9);
  Material mat;
  mat.model = NeoHookeanMaterial{1.0, 3.0};
  const PhaseMap pm =
      phase_map_from_labeler(grid, {mat}, [](const Vec2&) { return 0; });
  LoadingProgram prog;
  prog.mode = LoadingMode::UniaxialX;
  prog.lambda_steps = {1.06, 1.12};
  const ForwardResult res = solve_forward(grid, pm, prog);

  for (int j = 0; j < 2; ++j) {
    CHECK(res.boundary.fx[j] > 0.05);
    // No actuator on the free pair: the force channel is exactly zero.
    CHECK(res.boundary.fy[j] == 0.0);

    // Reaction resultants on the opposite grips balance.
    const Real fmax = res.reactions(EdgeId::XMax)(j, 0);
    const Real fmin = res.reactions(EdgeId::XMin)(j, 0);
    CHECK(fmin == doctest::Approx(-fmax).epsilon(1e-8));
    CHECK(fmax == doctest::Approx(res.boundary.fx[j]).epsilon(1e-12));

    // Free edges: the exported traction target is the exact zero condition.
    CHECK(res.boundary.edge(EdgeId::YMin).per_node[j].cwiseAbs().maxCoeff() == 0.0);
  }

  // Lateral contraction: the center column shrinks in y.
  const MatX& F = res.defgrad.values[1];
  const int center = grid.index(4, 4);
  CHECK(F(center, 3) < 0.995);
  CHECK(F(center, 0) > 1.05);
}

TEST_CASE("forward: soft inclusion concentrates strain") {
  const Grid2D grid = Grid2D::unit_square(13, 13);
  Material matrix, inclusion;
  matrix.model = NeoHookeanMaterial{2.0, 20.0};
  inclusion.model = NeoHookeanMaterial{1.0, 10.0};
  const PhaseMap pm = phase_map_from_labeler(
      grid, {matrix, inclusion}, [](const Vec2& X) {
        return (X - Vec2(0.5, 0.5)).norm() < 0.22 ? 1 : 0;
      });
  LoadingProgram prog;
  prog.mode = LoadingMode::Equibiaxial;
  prog.lambda_steps = {1.08};
  const ForwardResult res = solve_forward(grid, pm, prog);

  // Compare F11 at the center (soft) against the matrix ring average.
  const MatX& F = res.defgrad.values[0];
  const Real center = F(grid.index(6, 6), 0);
  Real ring = 0.0;
  int n_ring = 0;
  for (int i = 0; i < grid.size(); ++i) {
    const Real rad = (grid.node(i) - Vec2(0.5, 0.5)).norm();
    if (rad > 0.3 && rad < 0.45) {
      ring += F(i, 0);
      ++n_ring;
    }
  }
  ring /= n_ring;
  CHECK(center > ring + 0.01);

  // Deterministic assembly: a second solve reproduces the fields bitwise.
  const ForwardResult res2 = solve_forward(grid, pm, prog);
  CHECK((res.displacement.values[0] - res2.displacement.values[0])
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("noise: injection statistics and determinism") {
  FieldSnapshotSeries s;
  s.grid = Grid2D::unit_square(51, 51);
  s.components = 2;
  s.steps = {1.05, 1.1};
  s.values = {MatX::Ones(s.grid.size(), 2), MatX::Ones(s.grid.size(), 2) * 2.0};

  const FieldSnapshotSeries same = add_noise(s, 0.0, 99);
  CHECK((same.values[0] - s.values[0]).cwiseAbs().maxCoeff() == 0.0);

  const Real sigma = 0.001;
  const FieldSnapshotSeries noisy = add_noise(s, sigma, 99);
  Real var = 0.0;
  int n = 0;
  for (int j = 0; j < 2; ++j) {
    const MatX d = noisy.values[j] - s.values[j];
    var += d.squaredNorm();
    n += static_cast<int>(d.size());
  }
  var /= n;
  CHECK(n >= 10000);
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));

  const FieldSnapshotSeries again = add_noise(s, sigma, 99);
  CHECK((again.values[1] - noisy.values[1]).cwiseAbs().maxCoeff() == 0.0);
  const FieldSnapshotSeries other = add_noise(s, sigma, 100);
  CHECK((other.values[1] - noisy.values[1]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise: signal-to-noise ratio in decibels") {
  FieldSnapshotSeries ref;
  ref.grid = Grid2D::unit_square(5, 5);
  ref.components = 1;
  ref.steps = {1.1};
  ref.values = {MatX::Ones(25, 1) * 2.0};  // signal sum = 100

  FieldSnapshotSeries meas = ref;
  meas.values[0].array() += 0.2;  // error sum = 25 * 0.04 = 1
  const SnrResult r = snr(meas, ref, 0);
  CHECK(!r.noise_free);
  CHECK(r.decibels == doctest::Approx(20.0).epsilon(1e-12));

  const SnrResult clean = snr(ref, ref, 0);
  CHECK(clean.noise_free);
  CHECK(std::isinf(clean.decibels));

  FieldSnapshotSeries wrong = ref;
  wrong.components = 2;
  wrong.values[0] = MatX::Ones(25, 2);
  CHECK_THROWS_AS(snr(wrong, ref, 0), DimensionError);
  CHECK_THROWS_AS(snr(meas, ref, 3), DimensionError);
}
