#include "hf/stress_pipeline.hpp"

#include <cmath>

namespace hf {
namespace {

// Batched scalar with two directional-derivative lanes (d/dX1, d/dX2).
// Used to push the frozen kinematic chain F2 -> lift -> invariants -> dI/dF2
// through exact differentiation once, ahead of training.
struct TriA {
  ArrX v, d0, d1;
};

TriA tri_const(Real c, int n) {
  return {ArrX::Constant(n, c), ArrX::Zero(n), ArrX::Zero(n)};
}
TriA operator+(const TriA& a, const TriA& b) { return {a.v + b.v, a.d0 + b.d0, a.d1 + b.d1}; }
TriA operator-(const TriA& a, const TriA& b) { return {a.v - b.v, a.d0 - b.d0, a.d1 - b.d1}; }
TriA operator-(const TriA& a) { return {-a.v, -a.d0, -a.d1}; }
TriA operator*(const TriA& a, const TriA& b) {
  return {a.v * b.v, a.d0 * b.v + a.v * b.d0, a.d1 * b.v + a.v * b.d1};
}
TriA operator*(Real c, const TriA& a) { return {c * a.v, c * a.d0, c * a.d1}; }
TriA operator+(const TriA& a, Real c) { return {a.v + c, a.d0, a.d1}; }
TriA operator-(const TriA& a, Real c) { return {a.v - c, a.d0, a.d1}; }
TriA inverse(const TriA& a) {
  const ArrX iv = a.v.inverse();
  const ArrX iv2 = iv.square();
  return {iv, -a.d0 * iv2, -a.d1 * iv2};
}

struct ChannelKin {
  TriA y;                    // shifted invariant
  std::array<TriA, 4> T;     // dI/dF2 with both derivative lanes
};

}  // namespace

StressKinematics build_stress_kinematics(const NodeModelSpec& spec, LiftMode mode,
                                         const MatX& F2, const MatX* f_grad) {
  spec.validate();
  if (F2.cols() != 4) throw DimensionError("build_stress_kinematics: F2 must have 4 columns");
  if (f_grad && (f_grad->cols() != 8 || f_grad->rows() != F2.rows()))
    throw DimensionError("build_stress_kinematics: gradient table must be N x 8");
  const int n = static_cast<int>(F2.rows());

  StressKinematics kin;
  kin.n = n;
  kin.with_gradients = (f_grad != nullptr);
  kin.mode = mode;
  kin.valid = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);

  // Flag inverted points and evaluate them at the identity so the chain stays
  // finite; callers mask their contributions out.
  MatX F = F2;
  MatX G = f_grad ? *f_grad : MatX::Zero(n, 8);
  {
    const ArrX det =
        F.col(0).array() * F.col(3).array() - F.col(1).array() * F.col(2).array();
    for (int i = 0; i < n; ++i) {
      if (!(det[i] > 0.0) || !std::isfinite(det[i])) {
        kin.valid[i] = false;
        ++kin.n_invalid;
        F.row(i) << 1.0, 0.0, 0.0, 1.0;
        G.row(i).setZero();
      }
    }
  }

  // Seeds: component values with their frozen spatial rates.
  std::array<TriA, 4> f;
  for (int c = 0; c < 4; ++c)
    f[c] = {F.col(c).array(), G.col(c).array(), G.col(4 + c).array()};
  const TriA& f11 = f[0];
  const TriA& f12 = f[1];
  const TriA& f21 = f[2];
  const TriA& f22 = f[3];

  const TriA det = f11 * f22 - f12 * f21;
  // dDet/dF2 components (cofactors of F2)
  const std::array<TriA, 4> dd = {f22, -f21, -f12, f11};

  const bool inc = (mode == LiftMode::IncompressiblePlaneStress);
  const TriA inv_d = inverse(det);

  // Thickness stretch squared and its F2-gradient
  TriA c33 = inc ? inv_d * inv_d : tri_const(1.0, n);
  std::array<TriA, 4> dc33;
  if (inc) {
    const TriA q3 = -2.0 * (inv_d * inv_d * inv_d);
    for (int c = 0; c < 4; ++c) dc33[c] = q3 * dd[c];
  } else {
    for (int c = 0; c < 4; ++c) dc33[c] = tri_const(0.0, n);
  }

  const TriA C11 = f11 * f11 + f21 * f21;
  const TriA C12 = f11 * f12 + f21 * f22;
  const TriA C22 = f12 * f12 + f22 * f22;

  std::array<ChannelKin, 5> ch;  // I1, I2, I4v, I4w, J

  // I1 = tr C2 + c33
  ch[0].y = C11 + C22 + c33 - 3.0;
  for (int c = 0; c < 4; ++c) ch[0].T[c] = 2.0 * f[c] + dc33[c];

  // I2 = 0.5 (I1^2 - tr C3^2)
  {
    const TriA I1 = ch[0].y + 3.0;
    const TriA trC2 =
        C11 * C11 + 2.0 * (C12 * C12) + C22 * C22 + c33 * c33;
    ch[1].y = 0.5 * (I1 * I1 - trC2) - 3.0;
    const std::array<TriA, 4> FC = {f11 * C11 + f12 * C12, f11 * C12 + f12 * C22,
                                    f21 * C11 + f22 * C12, f21 * C12 + f22 * C22};
    for (int c = 0; c < 4; ++c)
      ch[1].T[c] = I1 * ch[0].T[c] - 2.0 * FC[c] - c33 * dc33[c];
  }

  // I4 along each structural direction
  auto fiber_channel = [&](const Vec3& dir, ChannelKin& out) {
    const Real v1 = dir[0], v2 = dir[1], v3 = dir[2];
    const TriA Fv1 = v1 * f11 + v2 * f12;
    const TriA Fv2 = v1 * f21 + v2 * f22;
    out.y = v1 * v1 * C11 + 2.0 * (v1 * v2) * C12 + v2 * v2 * C22 + v3 * v3 * c33 - 1.0;
    const Real vin[2] = {v1, v2};
    const TriA* Fv[2] = {&Fv1, &Fv2};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        out.T[2 * r + c] = 2.0 * vin[c] * (*Fv[r]) + (v3 * v3) * dc33[2 * r + c];
  };
  fiber_channel(spec.dirs.v, ch[2]);
  fiber_channel(spec.dirs.w, ch[3]);

  // J = det F3; identically 1 under the incompressible lift
  if (inc) {
    ch[4].y = tri_const(0.0, n);
    for (int c = 0; c < 4; ++c) ch[4].T[c] = tri_const(0.0, n);
  } else {
    ch[4].y = det - 1.0;
    for (int c = 0; c < 4; ++c) ch[4].T[c] = dd[c];
  }

  // Map the invariant channels onto the registry (mixed terms are fixed
  // convex combinations; shifted references combine linearly).
  kin.terms.resize(spec.n_terms());
  for (int k = 0; k < spec.n_terms(); ++k) {
    const TermSpec& t = spec.terms[k];
    const ChannelKin& a = ch[static_cast<int>(t.first)];
    TermKinematics& out = kin.terms[k];
    TriA y = t.mixed ? TriA(t.alpha * a.y + (1.0 - t.alpha) * ch[static_cast<int>(t.second)].y)
                     : a.y;
    out.y = std::move(y.v);
    if (kin.with_gradients) {
      out.y_dot[0] = std::move(y.d0);
      out.y_dot[1] = std::move(y.d1);
    }
    for (int c = 0; c < 4; ++c) {
      TriA T = t.mixed
                   ? TriA(t.alpha * a.T[c] + (1.0 - t.alpha) * ch[static_cast<int>(t.second)].T[c])
                   : a.T[c];
      out.T[c] = std::move(T.v);
      if (kin.with_gradients) {
        out.T_dot[0][c] = std::move(T.d0);
        out.T_dot[1][c] = std::move(T.d1);
      }
    }
  }
  return kin;
}

// ---------------------------------------------------------------------------
// RegistryFlows
// ---------------------------------------------------------------------------

RegistryFlows::RegistryFlows(NodeModelSpec spec, bool spatial_lanes)
    : spec_(std::move(spec)), lanes_(spatial_lanes ? 2 : 0) {
  spec_.validate();
}

void RegistryFlows::load_parameters(const MatX& theta, const MatX* u0, const MatX* u1,
                                    int m_steps) {
  const int L = spec_.n_params();
  if (theta.rows() != L)
    throw DimensionError("RegistryFlows: parameter rows must equal registry size L");
  if (lanes_ > 0 && (!u0 || !u1))
    throw ConfigurationError("RegistryFlows: spatial lanes need parameter derivative inputs");
  n_x_ = static_cast<int>(theta.cols());
  m_steps_ = m_steps;
  have_u_ = (u0 != nullptr);

  const int K = spec_.n_terms();
  const int Lk = spec_.params_per_flow();
  const int N = m_steps_ * n_x_;
  theta_term_.assign(K, MatX(N, Lk));
  base_theta_term_.assign(K, MatX(n_x_, Lk));
  for (int lane = 0; lane < 2; ++lane) {
    u_term_[lane].assign(have_u_ ? K : 0, MatX(N, Lk));
    base_u_term_[lane].assign(have_u_ ? K : 0, MatX(n_x_, Lk));
  }

  auto spread = [&](const MatX& src, std::vector<MatX>& dst, std::vector<MatX>& base_dst) {
    for (int k = 0; k < K; ++k) {
      const int off = spec_.term_offset(k);
      for (int p = 0; p < Lk; ++p) {
        for (int i = 0; i < n_x_; ++i) {
          const Real val = src(off + p, i);
          base_dst[k](i, p) = val;
          for (int j = 0; j < m_steps_; ++j) dst[k](j * n_x_ + i, p) = val;
        }
      }
    }
  };
  spread(theta, theta_term_, base_theta_term_);
  if (have_u_) {
    spread(*u0, u_term_[0], base_u_term_[0]);
    spread(*u1, u_term_[1], base_u_term_[1]);
  }

  theta_bar_term_.assign(K, MatX::Zero(N, Lk));
  base_theta_bar_term_.assign(K, MatX::Zero(n_x_, Lk));
  for (int lane = 0; lane < 2; ++lane) {
    u_bar_term_[lane].assign(have_u_ ? K : 0, MatX::Zero(N, Lk));
    base_u_bar_term_[lane].assign(have_u_ ? K : 0, MatX::Zero(n_x_, Lk));
  }
}

void RegistryFlows::forward(const StressKinematics& kin) {
  const int K = spec_.n_terms();
  const int N = m_steps_ * n_x_;
  if (kin.n != N)
    throw DimensionError("RegistryFlows::forward: kinematic table row count mismatch");
  g_.assign(K, ArrX());
  ghat_.assign(K, {ArrX(), ArrX()});
  tapes_.assign(K, TermTapes{});

  // The baseline depends only on the flow parameters, which are shared by all
  // load steps of a point, so it integrates once per spatial point and is
  // tiled across steps afterwards.
  const ArrX zeros = ArrX::Zero(n_x_);
  auto tile_steps = [&](const ArrX& per_point) {
    ArrX out(N);
    for (int j = 0; j < m_steps_; ++j) out.segment(j * n_x_, n_x_) = per_point;
    return out;
  };
  for (int k = 0; k < K; ++k) {
    FlowInputs in;
    in.theta = &theta_term_[k];
    in.lanes = lanes_;
    FlowInputs base_in;
    base_in.theta = &base_theta_term_[k];
    base_in.lanes = lanes_;
    if (lanes_ > 0) {
      in.u = {&u_term_[0][k], &u_term_[1][k]};
      base_in.u = {&base_u_term_[0][k], &base_u_term_[1][k]};
    }
    std::array<ArrX, 2> seed = {ArrX(), ArrX()};
    if (lanes_ > 0) seed = {kin.terms[k].y_dot[0], kin.terms[k].y_dot[1]};

    ArrX value_main, value_base;
    std::array<ArrX, 2> lane_main = {ArrX(), ArrX()}, lane_base = {ArrX(), ArrX()};
    flow_forward(spec_, in, kin.terms[k].y, seed, tapes_[k].main, value_main, lane_main);
    const std::array<ArrX, 2> zero_seed = {ArrX(), ArrX()};
    flow_forward(spec_, base_in, zeros, zero_seed, tapes_[k].base, value_base, lane_base);

    g_[k] = value_main - tile_steps(value_base);
    for (int q = 0; q < lanes_; ++q) ghat_[k][q] = lane_main[q] - tile_steps(lane_base[q]);
  }
}

void RegistryFlows::backward(const std::vector<ArrX>& g_bar,
                             const std::vector<std::array<ArrX, 2>>& ghat_bar) {
  const int K = spec_.n_terms();
  // The per-point baseline feeds every step row it was tiled into, so its
  // adjoint is the step-sum of the (negated) assembled adjoints.
  auto collapse_steps = [&](const ArrX& full) {
    ArrX out = ArrX::Zero(n_x_);
    for (int j = 0; j < m_steps_; ++j) out += full.segment(j * n_x_, n_x_);
    return out;
  };
  for (int k = 0; k < K; ++k) {
    FlowInputs in;
    in.theta = &theta_term_[k];
    in.lanes = lanes_;
    FlowInputs base_in;
    base_in.theta = &base_theta_term_[k];
    base_in.lanes = lanes_;
    std::array<MatX*, 2> ub = {nullptr, nullptr};
    std::array<MatX*, 2> base_ub = {nullptr, nullptr};
    if (lanes_ > 0) {
      in.u = {&u_term_[0][k], &u_term_[1][k]};
      base_in.u = {&base_u_term_[0][k], &base_u_term_[1][k]};
      ub = {&u_bar_term_[0][k], &u_bar_term_[1][k]};
      base_ub = {&base_u_bar_term_[0][k], &base_u_bar_term_[1][k]};
    }
    std::array<ArrX, 2> lane_bar = {ArrX(), ArrX()};
    std::array<ArrX, 2> base_lane_bar = {ArrX(), ArrX()};
    for (int q = 0; q < lanes_; ++q) {
      lane_bar[q] = ghat_bar[k][q];
      base_lane_bar[q] = -collapse_steps(ghat_bar[k][q]);
    }
    flow_backward(spec_, in, tapes_[k].main, g_bar[k], lane_bar, theta_bar_term_[k], ub);
    flow_backward(spec_, base_in, tapes_[k].base, ArrX(-collapse_steps(g_bar[k])),
                  base_lane_bar, base_theta_bar_term_[k], base_ub);
  }
}

void RegistryFlows::reduce_parameter_adjoints(MatX& theta_bar, MatX* u0_bar,
                                              MatX* u1_bar) const {
  const int K = spec_.n_terms();
  const int Lk = spec_.params_per_flow();
  auto gather = [&](const std::vector<MatX>& src, const std::vector<MatX>& base_src,
                    MatX& dst) {
    for (int k = 0; k < K; ++k) {
      const int off = spec_.term_offset(k);
      for (int p = 0; p < Lk; ++p)
        for (int i = 0; i < n_x_; ++i) {
          Real acc = base_src[k](i, p);
          for (int j = 0; j < m_steps_; ++j) acc += src[k](j * n_x_ + i, p);
          dst(off + p, i) += acc;
        }
    }
  };
  gather(theta_bar_term_, base_theta_bar_term_, theta_bar);
  if (u0_bar) gather(u_bar_term_[0], base_u_bar_term_[0], *u0_bar);
  if (u1_bar) gather(u_bar_term_[1], base_u_bar_term_[1], *u1_bar);
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

MatX assemble_stress(const StressKinematics& kin, const RegistryFlows& flows) {
  const int K = flows.spec().n_terms();
  MatX P = MatX::Zero(kin.n, 4);
  for (int c = 0; c < 4; ++c) {
    ArrX acc = ArrX::Zero(kin.n);
    for (int k = 0; k < K; ++k) acc += flows.g(k) * kin.terms[k].T[c];
    P.col(c) = acc;
  }
  if (kin.n_invalid > 0)
    for (int i = 0; i < kin.n; ++i)
      if (!kin.valid[i]) P.row(i).setZero();
  return P;
}

MatX assemble_divergence(const StressKinematics& kin, const RegistryFlows& flows) {
  if (!kin.with_gradients || !flows.spatial_lanes())
    throw ConfigurationError("assemble_divergence: gradients were not computed");
  const int K = flows.spec().n_terms();
  MatX div = MatX::Zero(kin.n, 2);
  for (int b = 0; b < 2; ++b) {
    // r_b = d P[b,1] / dX1 + d P[b,2] / dX2
    const int c0 = 2 * b, c1 = 2 * b + 1;
    ArrX acc = ArrX::Zero(kin.n);
    for (int k = 0; k < K; ++k) {
      const TermKinematics& t = kin.terms[k];
      acc += flows.ghat(k, 0) * t.T[c0] + flows.g(k) * t.T_dot[0][c0] +
             flows.ghat(k, 1) * t.T[c1] + flows.g(k) * t.T_dot[1][c1];
    }
    div.col(b) = acc;
  }
  if (kin.n_invalid > 0)
    for (int i = 0; i < kin.n; ++i)
      if (!kin.valid[i]) div.row(i).setZero();
  return div;
}

void assembly_adjoints(const StressKinematics& kin, const MatX& P_bar, const MatX& div_bar,
                       std::vector<ArrX>& g_bar, std::vector<std::array<ArrX, 2>>& ghat_bar) {
  const int K = static_cast<int>(kin.terms.size());
  const bool lanes = kin.with_gradients && div_bar.size() > 0;
  g_bar.assign(K, ArrX::Zero(kin.n));
  ghat_bar.assign(K, {lanes ? ArrX::Zero(kin.n) : ArrX(), lanes ? ArrX::Zero(kin.n) : ArrX()});

  // Mask invalid rows once.
  auto masked = [&](const MatX& m) {
    MatX out = m;
    if (kin.n_invalid > 0 && out.size() > 0)
      for (int i = 0; i < kin.n; ++i)
        if (!kin.valid[i]) out.row(i).setZero();
    return out;
  };
  const MatX Pb = masked(P_bar);
  const MatX Db = masked(div_bar);

  for (int k = 0; k < K; ++k) {
    const TermKinematics& t = kin.terms[k];
    if (Pb.size() > 0)
      for (int c = 0; c < 4; ++c) g_bar[k] += Pb.col(c).array() * t.T[c];
    if (Db.size() > 0) {
      const ArrX db0 = Db.col(0).array(), db1 = Db.col(1).array();
      g_bar[k] += db0 * t.T_dot[0][0] + db0 * t.T_dot[1][1] + db1 * t.T_dot[0][2] +
                  db1 * t.T_dot[1][3];
      ghat_bar[k][0] += db0 * t.T[0] + db1 * t.T[2];
      ghat_bar[k][1] += db0 * t.T[1] + db1 * t.T[3];
    }
  }
}

PointStress stress_at_point(const NodeModelSpec& spec, LiftMode mode, const VecX& theta,
                            const Mat2& F2, const std::array<Mat2, 2>* f_grad,
                            const std::array<VecX, 2>* theta_grad) {
  const bool lanes = (f_grad != nullptr);
  if (lanes && !theta_grad)
    throw ConfigurationError("stress_at_point: divergence needs parameter derivatives");

  MatX F(1, 4);
  F << F2(0, 0), F2(0, 1), F2(1, 0), F2(1, 1);
  MatX G(1, 8);
  if (lanes) {
    const Mat2& a = (*f_grad)[0];
    const Mat2& b = (*f_grad)[1];
    G << a(0, 0), a(0, 1), a(1, 0), a(1, 1), b(0, 0), b(0, 1), b(1, 0), b(1, 1);
  }
  StressKinematics kin = build_stress_kinematics(spec, mode, F, lanes ? &G : nullptr);

  RegistryFlows flows(spec, lanes);
  MatX th = theta;  // L x 1
  MatX u0, u1;
  if (lanes) {
    u0 = (*theta_grad)[0];
    u1 = (*theta_grad)[1];
  }
  flows.load_parameters(th, lanes ? &u0 : nullptr, lanes ? &u1 : nullptr, 1);
  flows.forward(kin);

  PointStress out;
  out.valid = kin.valid[0];
  const MatX P = assemble_stress(kin, flows);
  out.P << P(0, 0), P(0, 1), P(0, 2), P(0, 3);
  if (lanes) {
    const MatX div = assemble_divergence(kin, flows);
    out.divergence << div(0, 0), div(0, 1);
  }
  return out;
}

}  // namespace hf
