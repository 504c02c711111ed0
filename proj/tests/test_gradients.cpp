// Finite-difference validation of every hand-written derivative path:
// MLP tangents and parameter gradients, the batched flow engine forward
// lanes and reverse pass, and the assembled stress/divergence adjoints.
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hf/constitutive.hpp"
#include "hf/flow_bundle.hpp"
#include "hf/mlp.hpp"
#include "hf/rng.hpp"
#include "hf/stress_pipeline.hpp"

using namespace hf;

namespace {

NodeModelSpec default_spec() {
  NodeModelSpec spec;
  spec.terms = default_registry();
  return spec;
}

MatX randn(Rng& rng, int r, int c, Real s = 1.0) {
  std::normal_distribution<Real> d(0.0, s);
  MatX m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

}  // namespace

TEST_CASE("mlp tangent lanes match directional finite differences") {
  Rng rng(stage_seed(11, "mlp-tangent"));
  Mlp net({3, 8, 6, 2});
  net.init(rng);
  const int batch = 5;
  const MatX x = randn(rng, 3, batch);
  const std::vector<MatX> dirs = {randn(rng, 3, batch), randn(rng, 3, batch)};

  Mlp::Tape tape;
  MatX y;
  std::vector<MatX> y_dot;
  net.forward(x, dirs, tape, y, y_dot);
  REQUIRE(y_dot.size() == 2);

  CHECK((y - net.eval(x)).norm() == doctest::Approx(0.0).epsilon(1e-14));
  const Real h = 1e-6;
  for (int q = 0; q < 2; ++q) {
    const MatX fd = (net.eval(x + h * dirs[q]) - net.eval(x - h * dirs[q])) / (2 * h);
    CHECK((y_dot[q] - fd).norm() == doctest::Approx(0.0).epsilon(1e-7));
  }
}

TEST_CASE("mlp reverse pass matches finite differences in every parameter") {
  Rng rng(stage_seed(11, "mlp-reverse"));
  Mlp net({3, 8, 6, 2});
  net.init(rng);
  const int batch = 4;
  const MatX x = randn(rng, 3, batch);
  const std::vector<MatX> dirs = {randn(rng, 3, batch), randn(rng, 3, batch)};
  const MatX A = randn(rng, 2, batch);
  const std::vector<MatX> B = {randn(rng, 2, batch), randn(rng, 2, batch)};

  auto loss = [&]() {
    Mlp::Tape tape;
    MatX y;
    std::vector<MatX> y_dot;
    net.forward(x, dirs, tape, y, y_dot);
    return (y.array() * A.array()).sum() + (y_dot[0].array() * B[0].array()).sum() +
           (y_dot[1].array() * B[1].array()).sum();
  };

  Mlp::Tape tape;
  MatX y;
  std::vector<MatX> y_dot;
  net.forward(x, dirs, tape, y, y_dot);
  VecX grad = VecX::Zero(net.n_params());
  net.backward(tape, A, B, grad);

  const Real h = 1e-6;
  for (int p = 0; p < net.n_params(); ++p) {
    const Real keep = net.parameters()[p];
    net.parameters()[p] = keep + h;
    const Real lp = loss();
    net.parameters()[p] = keep - h;
    const Real lm = loss();
    net.parameters()[p] = keep;
    const Real fd = (lp - lm) / (2 * h);
    CHECK(grad[p] == doctest::Approx(fd).epsilon(5e-5));
  }
}

TEST_CASE("batched flow agrees with the scalar integrator") {
  Rng rng(stage_seed(12, "flow-value"));
  const NodeModelSpec spec = default_spec();
  const int n = 6, Lk = spec.params_per_flow();
  const MatX theta = randn(rng, n, Lk, 0.5);
  const ArrX x0 = randn(rng, n, 1, 0.4).col(0).array();

  FlowInputs in;
  in.theta = &theta;
  in.lanes = 0;
  FlowTape tape;
  ArrX value;
  std::array<ArrX, 2> lanes;
  flow_forward(spec, in, x0, {ArrX(), ArrX()}, tape, value, lanes);

  for (int i = 0; i < n; ++i) {
    const Real ref = node_flow(spec, theta.row(i).transpose(), x0[i]);
    CHECK(value[i] == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("flow tangent lanes match joint parameter/state perturbations") {
  Rng rng(stage_seed(12, "flow-lanes"));
  const NodeModelSpec spec = default_spec();
  const int n = 5, Lk = spec.params_per_flow();
  const MatX theta = randn(rng, n, Lk, 0.5);
  const MatX u0 = randn(rng, n, Lk, 0.7);
  const MatX u1 = randn(rng, n, Lk, 0.7);
  const ArrX x0 = randn(rng, n, 1, 0.4).col(0).array();
  const ArrX s0 = randn(rng, n, 1, 1.0).col(0).array();
  const ArrX s1 = randn(rng, n, 1, 1.0).col(0).array();

  FlowInputs in;
  in.theta = &theta;
  in.u = {&u0, &u1};
  in.lanes = 2;
  FlowTape tape;
  ArrX value;
  std::array<ArrX, 2> lanes;
  flow_forward(spec, in, x0, {s0, s1}, tape, value, lanes);

  // lane q carries d/da of flow(theta + a u_q, x0 + a seed_q) at a = 0
  const Real h = 1e-6;
  const MatX* us[2] = {&u0, &u1};
  const ArrX* ss[2] = {&s0, &s1};
  for (int q = 0; q < 2; ++q) {
    for (int i = 0; i < n; ++i) {
      const VecX tp = theta.row(i).transpose() + h * us[q]->row(i).transpose();
      const VecX tm = theta.row(i).transpose() - h * us[q]->row(i).transpose();
      const Real fd = (node_flow(spec, tp, x0[i] + h * (*ss[q])[i]) -
                       node_flow(spec, tm, x0[i] - h * (*ss[q])[i])) /
                      (2 * h);
      CHECK(lanes[q][i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("flow reverse pass matches finite differences") {
  Rng rng(stage_seed(12, "flow-reverse"));
  const NodeModelSpec spec = default_spec();
  const int n = 4, Lk = spec.params_per_flow();
  MatX theta = randn(rng, n, Lk, 0.5);
  MatX u0 = randn(rng, n, Lk, 0.6);
  MatX u1 = randn(rng, n, Lk, 0.6);
  const ArrX x0 = randn(rng, n, 1, 0.4).col(0).array();
  const ArrX s0 = randn(rng, n, 1, 1.0).col(0).array();
  const ArrX s1 = randn(rng, n, 1, 1.0).col(0).array();
  const ArrX wa = randn(rng, n, 1, 1.0).col(0).array();
  const ArrX wb0 = randn(rng, n, 1, 1.0).col(0).array();
  const ArrX wb1 = randn(rng, n, 1, 1.0).col(0).array();

  auto loss = [&]() {
    FlowInputs in;
    in.theta = &theta;
    in.u = {&u0, &u1};
    in.lanes = 2;
    FlowTape tape;
    ArrX value;
    std::array<ArrX, 2> lanes;
    flow_forward(spec, in, x0, {s0, s1}, tape, value, lanes);
    return (value * wa).sum() + (lanes[0] * wb0).sum() + (lanes[1] * wb1).sum();
  };

  FlowInputs in;
  in.theta = &theta;
  in.u = {&u0, &u1};
  in.lanes = 2;
  FlowTape tape;
  ArrX value;
  std::array<ArrX, 2> lanes;
  flow_forward(spec, in, x0, {s0, s1}, tape, value, lanes);

  MatX theta_bar = MatX::Zero(n, Lk);
  MatX u0_bar = MatX::Zero(n, Lk);
  MatX u1_bar = MatX::Zero(n, Lk);
  std::array<MatX*, 2> ub = {&u0_bar, &u1_bar};
  flow_backward(spec, in, tape, ArrX(wa), {ArrX(wb0), ArrX(wb1)}, theta_bar, ub);

  const Real h = 1e-6;
  Rng pick(stage_seed(12, "flow-reverse-pick"));
  std::uniform_int_distribution<int> ri(0, n - 1), rp(0, Lk - 1);
  auto fd_check = [&](MatX& target, const MatX& bar) {
    for (int s = 0; s < 12; ++s) {
      const int i = ri(pick), p = rp(pick);
      const Real keep = target(i, p);
      target(i, p) = keep + h;
      const Real lp = loss();
      target(i, p) = keep - h;
      const Real lm = loss();
      target(i, p) = keep;
      const Real fd = (lp - lm) / (2 * h);
      CHECK(bar(i, p) == doctest::Approx(fd).epsilon(5e-5));
    }
  };
  fd_check(theta, theta_bar);
  fd_check(u0, u0_bar);
  fd_check(u1, u1_bar);
}

TEST_CASE("invariant tables match direct invariant evaluation and FD") {
  const NodeModelSpec spec = default_spec();
  MatX F2(1, 4);
  F2 << 1.08, 0.07, -0.04, 0.96;
  MatX G(1, 8);
  G << 0.3, -0.2, 0.1, 0.05, -0.15, 0.25, 0.02, -0.3;

  for (LiftMode mode : {LiftMode::IncompressiblePlaneStress, LiftMode::PlaneStrain}) {
    CAPTURE(to_string(mode));
    const StressKinematics kin = build_stress_kinematics(spec, mode, F2, &G);
    REQUIRE(kin.n == 1);
    REQUIRE(kin.n_invalid == 0);

    auto lift_inv = [&](const MatX& f2row) {
      Mat2 m;
      m << f2row(0, 0), f2row(0, 1), f2row(0, 2), f2row(0, 3);
      return invariants(lift_plane<Real>(m, mode), spec.dirs);
    };

    const Invariants inv = lift_inv(F2);
    for (int k = 0; k < spec.n_terms(); ++k) {
      const TermSpec& t = spec.terms[k];
      CHECK(kin.terms[k].y[0] ==
            doctest::Approx(t.value(inv) - t.reference()).epsilon(1e-12));

      // T = d(term invariant)/dF2 by central differences
      const Real h = 1e-6;
      for (int c = 0; c < 4; ++c) {
        MatX Fp = F2, Fm = F2;
        Fp(0, c) += h;
        Fm(0, c) -= h;
        const Real fd = (t.value(lift_inv(Fp)) - t.value(lift_inv(Fm))) / (2 * h);
        CHECK(kin.terms[k].T[c][0] == doctest::Approx(fd).epsilon(1e-6));
      }

      // spatial rates: perturb F2 along the frozen gradient of each axis
      for (int a = 0; a < 2; ++a) {
        MatX Fp = F2 + 1e-6 * G.block(0, 4 * a, 1, 4);
        MatX Fm = F2 - 1e-6 * G.block(0, 4 * a, 1, 4);
        const StressKinematics kp = build_stress_kinematics(spec, mode, Fp, nullptr);
        const StressKinematics km = build_stress_kinematics(spec, mode, Fm, nullptr);
        CHECK(kin.terms[k].y_dot[a][0] ==
              doctest::Approx((kp.terms[k].y[0] - km.terms[k].y[0]) / 2e-6).epsilon(1e-6));
        for (int c = 0; c < 4; ++c)
          CHECK(kin.terms[k].T_dot[a][c][0] ==
                doctest::Approx((kp.terms[k].T[c][0] - km.terms[k].T[c][0]) / 2e-6)
                    .epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("inverted points are flagged and masked") {
  const NodeModelSpec spec = default_spec();
  MatX F2(3, 4);
  F2 << 1.05, 0.02, -0.01, 0.98,   // fine
      0.1, 1.0, 1.0, 0.1,          // det < 0
      1.0, 0.0, 0.0, 1.0;          // identity
  const StressKinematics kin =
      build_stress_kinematics(spec, LiftMode::IncompressiblePlaneStress, F2, nullptr);
  CHECK(kin.n_invalid == 1);
  CHECK(kin.valid[0]);
  CHECK(!kin.valid[1]);
  CHECK(kin.valid[2]);

  Rng rng(stage_seed(13, "mask"));
  RegistryFlows flows(spec, false);
  const MatX theta = randn(rng, spec.n_params(), 3, 0.4);
  flows.load_parameters(theta, nullptr, nullptr, 1);
  flows.forward(kin);
  const MatX P = assemble_stress(kin, flows);
  CHECK(P.row(1).norm() == 0.0);        // masked
  CHECK(P.row(2).norm() == doctest::Approx(0.0).epsilon(1e-13));  // reference state
  CHECK(P.row(0).norm() > 1e-8);
}

TEST_CASE("assembled stress equals the scalar constitutive evaluation") {
  Rng rng(stage_seed(13, "assemble"));
  const NodeModelSpec spec = default_spec();
  MaterialPointModel m(spec);
  m.theta = randn(rng, spec.n_params(), 1, 0.4).col(0);

  Mat2 F2;
  F2 << 1.08, 0.07, -0.04, 0.96;
  for (LiftMode mode : {LiftMode::IncompressiblePlaneStress, LiftMode::PlaneStrain}) {
    CAPTURE(to_string(mode));
    const Mat2 ref = pk1_stress_inplane(m, F2, mode);
    const PointStress got = stress_at_point(spec, mode, m.theta, F2);
    CHECK(got.valid);
    CHECK((got.P - ref).norm() == doctest::Approx(0.0).epsilon(1e-11));
  }
}

TEST_CASE("pointwise divergence matches FD of the stress field") {
  // Smooth synthetic fields: F2(X) and theta(X) with analytic X-derivatives.
  Rng rng(stage_seed(13, "divergence"));
  const NodeModelSpec spec = default_spec();
  const int L = spec.n_params();
  const VecX t0 = randn(rng, L, 1, 0.35).col(0);
  const VecX c1 = randn(rng, L, 1, 0.25).col(0);
  const VecX c2 = randn(rng, L, 1, 0.25).col(0);

  auto f2_at = [](const Vec2& X) {
    Mat2 F;
    F << 1.0 + 0.05 * std::sin(X[0]), 0.03 * X[1] + 0.02 * X[0] * X[0],
        0.02 * X[0] * X[1], 1.0 - 0.04 * std::cos(X[1]);
    return F;
  };
  auto f2_grad_at = [](const Vec2& X) {
    std::array<Mat2, 2> g;
    g[0] << 0.05 * std::cos(X[0]), 0.04 * X[0], 0.02 * X[1], 0.0;
    g[1] << 0.0, 0.03, 0.02 * X[0], 0.04 * std::sin(X[1]);
    return g;
  };
  auto theta_at = [&](const Vec2& X) { return VecX(t0 + X[0] * c1 + X[1] * c2); };

  const Vec2 X(0.4, 0.7);
  const std::array<Mat2, 2> fg = f2_grad_at(X);
  const std::array<VecX, 2> tg = {c1, c2};

  for (LiftMode mode : {LiftMode::IncompressiblePlaneStress, LiftMode::PlaneStrain}) {
    CAPTURE(to_string(mode));
    const PointStress ps = stress_at_point(spec, mode, theta_at(X), f2_at(X), &fg, &tg);

    const Real h = 1e-5;
    Mat2 dP[2];
    for (int a = 0; a < 2; ++a) {
      Vec2 Xp = X, Xm = X;
      Xp[a] += h;
      Xm[a] -= h;
      const PointStress pp = stress_at_point(spec, mode, theta_at(Xp), f2_at(Xp));
      const PointStress pm = stress_at_point(spec, mode, theta_at(Xm), f2_at(Xm));
      dP[a] = (pp.P - pm.P) / (2 * h);
    }
    const Vec2 fd(dP[0](0, 0) + dP[1](0, 1), dP[0](1, 0) + dP[1](1, 1));
    CHECK(ps.divergence[0] == doctest::Approx(fd[0]).epsilon(1e-6));
    CHECK(ps.divergence[1] == doctest::Approx(fd[1]).epsilon(1e-6));
  }
}

TEST_CASE("pipeline adjoints match finite differences end to end") {
  Rng rng(stage_seed(13, "pipeline-adjoint"));
  const NodeModelSpec spec = default_spec();
  const int L = spec.n_params();
  const int nx = 3, m = 2, N = m * nx;

  MatX theta = randn(rng, L, nx, 0.35);
  MatX u0 = randn(rng, L, nx, 0.3);
  MatX u1 = randn(rng, L, nx, 0.3);
  MatX F2 = randn(rng, N, 4, 0.05);
  F2.col(0).array() += 1.0;
  F2.col(3).array() += 1.0;
  const MatX G = randn(rng, N, 8, 0.2);
  const MatX WP = randn(rng, N, 4);
  const MatX WD = randn(rng, N, 2);
  const LiftMode mode = LiftMode::IncompressiblePlaneStress;

  const StressKinematics kin = build_stress_kinematics(spec, mode, F2, &G);
  REQUIRE(kin.n_invalid == 0);

  auto loss = [&]() {
    RegistryFlows flows(spec, true);
    flows.load_parameters(theta, &u0, &u1, m);
    flows.forward(kin);
    const MatX P = assemble_stress(kin, flows);
    const MatX div = assemble_divergence(kin, flows);
    return (P.array() * WP.array()).sum() + (div.array() * WD.array()).sum();
  };

  RegistryFlows flows(spec, true);
  flows.load_parameters(theta, &u0, &u1, m);
  flows.forward(kin);
  std::vector<ArrX> g_bar;
  std::vector<std::array<ArrX, 2>> ghat_bar;
  assembly_adjoints(kin, WP, WD, g_bar, ghat_bar);
  flows.backward(g_bar, ghat_bar);
  MatX theta_bar = MatX::Zero(L, nx);
  MatX u0_bar = MatX::Zero(L, nx);
  MatX u1_bar = MatX::Zero(L, nx);
  flows.reduce_parameter_adjoints(theta_bar, &u0_bar, &u1_bar);

  const Real h = 1e-6;
  Rng pick(stage_seed(13, "pipeline-pick"));
  std::uniform_int_distribution<int> rl(0, L - 1), rx(0, nx - 1);
  auto fd_check = [&](MatX& target, const MatX& bar, int samples) {
    for (int s = 0; s < samples; ++s) {
      const int p = rl(pick), i = rx(pick);
      const Real keep = target(p, i);
      target(p, i) = keep + h;
      const Real lp = loss();
      target(p, i) = keep - h;
      const Real lm = loss();
      target(p, i) = keep;
      CHECK(bar(p, i) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
    }
  };
  fd_check(theta, theta_bar, 12);
  fd_check(u0, u0_bar, 8);
  fd_check(u1, u1_bar, 8);
}
