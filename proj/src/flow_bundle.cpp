#include "hf/flow_bundle.hpp"

#include <cmath>

namespace hf {
namespace {

// Transient per-layer record of one batched rhs evaluation.
struct RhsTape {
  // x[l]: post-activation values entering layer l (x[0] is the state h);
  // tx[q][l]: post-activation tangents; ta[q][l]: pre-activation tangents of
  // layer l's output (needed for the tanh'' coupling in reverse).
  std::vector<std::vector<ArrX>> x;
  std::vector<std::vector<std::vector<ArrX>>> tx, ta;
};

// f(h; theta) with lane tangents.  Layer l maps n_in -> n_out with
// W(i,j) = theta col (off + j*n_out + i) and bias col (off + n_out*n_in + i);
// lane tangents receive both W * tx and U * x contributions.
void rhs_forward(const NodeModelSpec& spec, const FlowInputs& in, const ArrX& h,
                 const std::array<ArrX, 2>& th, RhsTape& tape, ArrX& f,
                 std::array<ArrX, 2>& tf) {
  const std::vector<int>& w = spec.flow_widths;
  const int n_layers = static_cast<int>(w.size()) - 1;
  const int Q = in.lanes;
  const MatX& theta = *in.theta;

  tape.x.assign(n_layers + 1, {});
  tape.tx.assign(Q, std::vector<std::vector<ArrX>>(n_layers + 1));
  tape.ta.assign(Q, std::vector<std::vector<ArrX>>(n_layers));

  tape.x[0] = {h};
  for (int q = 0; q < Q; ++q) tape.tx[q][0] = {th[q]};

  int off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int n_in = w[l], n_out = w[l + 1];
    const bool hidden = (l + 1 < n_layers);
    tape.x[l + 1].resize(n_out);
    for (int q = 0; q < Q; ++q) {
      tape.tx[q][l + 1].resize(n_out);
      tape.ta[q][l].resize(n_out);
    }
    for (int i = 0; i < n_out; ++i) {
      ArrX a = theta.col(off + n_out * n_in + i).array();  // bias (broadcast per point)
      for (int j = 0; j < n_in; ++j)
        a += theta.col(off + j * n_out + i).array() * tape.x[l][j];
      for (int q = 0; q < Q; ++q) {
        const MatX& u = *in.u[q];
        ArrX ta = u.col(off + n_out * n_in + i).array();
        for (int j = 0; j < n_in; ++j)
          ta += theta.col(off + j * n_out + i).array() * tape.tx[q][l][j] +
                u.col(off + j * n_out + i).array() * tape.x[l][j];
        tape.ta[q][l][i] = std::move(ta);
      }
      if (hidden) {
        tape.x[l + 1][i] = a.tanh();
        const ArrX sp = 1.0 - tape.x[l + 1][i].square();
        for (int q = 0; q < Q; ++q) tape.tx[q][l + 1][i] = sp * tape.ta[q][l][i];
      } else {
        tape.x[l + 1][i] = std::move(a);
        for (int q = 0; q < Q; ++q) tape.tx[q][l + 1][i] = tape.ta[q][l][i];
      }
    }
    off += n_out * n_in + n_out;
  }
  f = tape.x[n_layers][0];
  for (int q = 0; q < Q; ++q) tf[q] = tape.tx[q][n_layers][0];
}

// Reverse of rhs_forward.  Consumes adjoints of (f, tf), produces adjoints of
// (h, th) and accumulates into theta_bar / u_bar.
void rhs_backward(const NodeModelSpec& spec, const FlowInputs& in, const RhsTape& tape,
                  const ArrX& f_bar, const std::array<ArrX, 2>& tf_bar, ArrX& h_bar,
                  std::array<ArrX, 2>& th_bar, MatX& theta_bar,
                  const std::array<MatX*, 2>& u_bar) {
  const std::vector<int>& w = spec.flow_widths;
  const int n_layers = static_cast<int>(w.size()) - 1;
  const int Q = in.lanes;
  const MatX& theta = *in.theta;

  std::vector<ArrX> x_bar = {f_bar};
  std::vector<std::vector<ArrX>> tx_bar(Q);
  for (int q = 0; q < Q; ++q) tx_bar[q] = {tf_bar[q]};

  int off_end = 0;
  for (int l = 0; l < n_layers; ++l) off_end += w[l + 1] * w[l] + w[l + 1];

  int off = off_end;
  for (int l = n_layers - 1; l >= 0; --l) {
    const int n_in = w[l], n_out = w[l + 1];
    off -= n_out * n_in + n_out;
    const bool hidden = (l + 1 < n_layers);

    // Pre-activation adjoints.  Tangent lanes couple into the value lane via
    // sigma''(a) = -2 tanh(a) sigma'(a).
    std::vector<ArrX> a_bar(n_out);
    std::vector<std::vector<ArrX>> ta_bar(Q, std::vector<ArrX>(n_out));
    for (int i = 0; i < n_out; ++i) {
      if (hidden) {
        const ArrX& xo = tape.x[l + 1][i];
        const ArrX sp = 1.0 - xo.square();
        a_bar[i] = sp * x_bar[i];
        for (int q = 0; q < Q; ++q) {
          ta_bar[q][i] = sp * tx_bar[q][i];
          a_bar[i] += (-2.0 * xo * sp) * tape.ta[q][l][i] * tx_bar[q][i];
        }
      } else {
        a_bar[i] = x_bar[i];
        for (int q = 0; q < Q; ++q) ta_bar[q][i] = tx_bar[q][i];
      }
    }

    // Parameter adjoints and downstream input adjoints.
    std::vector<ArrX> xp_bar(n_in);
    std::vector<std::vector<ArrX>> txp_bar(Q, std::vector<ArrX>(n_in));
    for (int j = 0; j < n_in; ++j) {
      xp_bar[j] = ArrX::Zero(a_bar[0].size());
      for (int q = 0; q < Q; ++q) txp_bar[q][j] = ArrX::Zero(a_bar[0].size());
    }
    for (int i = 0; i < n_out; ++i) {
      theta_bar.col(off + n_out * n_in + i).array() += a_bar[i];
      for (int q = 0; q < Q; ++q)
        if (u_bar[q]) u_bar[q]->col(off + n_out * n_in + i).array() += ta_bar[q][i];
      for (int j = 0; j < n_in; ++j) {
        const auto Wij = theta.col(off + j * n_out + i).array();
        theta_bar.col(off + j * n_out + i).array() += a_bar[i] * tape.x[l][j];
        xp_bar[j] += Wij * a_bar[i];
        for (int q = 0; q < Q; ++q) {
          const auto Uij = (*in.u[q]).col(off + j * n_out + i).array();
          theta_bar.col(off + j * n_out + i).array() += ta_bar[q][i] * tape.tx[q][l][j];
          if (u_bar[q])
            u_bar[q]->col(off + j * n_out + i).array() += ta_bar[q][i] * tape.x[l][j];
          xp_bar[j] += Uij * ta_bar[q][i];
          txp_bar[q][j] += Wij * ta_bar[q][i];
        }
      }
    }
    x_bar = std::move(xp_bar);
    for (int q = 0; q < Q; ++q) tx_bar[q] = std::move(txp_bar[q]);
  }
  h_bar = x_bar[0];
  for (int q = 0; q < Q; ++q) th_bar[q] = tx_bar[q][0];
}

FlowState axpy(const FlowState& s, Real c, const FlowState& k) {
  FlowState r;
  r.lanes = s.lanes;
  r.h = s.h + c * k.h;
  for (int q = 0; q < s.lanes; ++q) r.t[q] = s.t[q] + c * k.t[q];
  return r;
}

// Phi(state) = (f(h), f'(h) t_a + df/dtheta . u_a): one batched rhs call.
void eval_phi(const NodeModelSpec& spec, const FlowInputs& in, const FlowState& s,
              RhsTape& tape, FlowState& k) {
  k.lanes = s.lanes;
  std::array<ArrX, 2> th;
  for (int q = 0; q < s.lanes; ++q) th[q] = s.t[q];
  rhs_forward(spec, in, s.h, th, tape, k.h, k.t);
}

}  // namespace

void flow_forward(const NodeModelSpec& spec, const FlowInputs& in, const ArrX& x0,
                  const std::array<ArrX, 2>& seed, FlowTape& tape, ArrX& value,
                  std::array<ArrX, 2>& lane_out) {
  const int n = spec.n_rk4_steps;
  const Real dt = 1.0 / n;
  FlowState s;
  s.lanes = in.lanes;
  s.h = x0;
  for (int q = 0; q < in.lanes; ++q)
    s.t[q] = seed[q].size() ? seed[q] : ArrX::Zero(x0.size());

  tape.n = n;
  tape.step_start.assign(n, FlowState{});
  RhsTape rt;
  FlowState k1, k2, k3, k4;
  for (int step = 0; step < n; ++step) {
    tape.step_start[step] = s;
    eval_phi(spec, in, s, rt, k1);
    eval_phi(spec, in, axpy(s, 0.5 * dt, k1), rt, k2);
    eval_phi(spec, in, axpy(s, 0.5 * dt, k2), rt, k3);
    eval_phi(spec, in, axpy(s, dt, k3), rt, k4);
    s.h += dt / 6.0 * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
    for (int q = 0; q < in.lanes; ++q)
      s.t[q] += dt / 6.0 * (k1.t[q] + 2.0 * k2.t[q] + 2.0 * k3.t[q] + k4.t[q]);
  }
  if (!s.h.isFinite().all())
    throw NumericRangeError("flow_forward: non-finite state after integration");
  value = s.h;
  for (int q = 0; q < in.lanes; ++q) lane_out[q] = s.t[q];
}

void flow_backward(const NodeModelSpec& spec, const FlowInputs& in, const FlowTape& tape,
                   const ArrX& value_bar, const std::array<ArrX, 2>& lane_bar,
                   MatX& theta_bar, std::array<MatX*, 2> u_bar) {
  const int n = tape.n;
  const Real dt = 1.0 / n;
  const int Q = in.lanes;

  FlowState s_bar;
  s_bar.lanes = Q;
  s_bar.h = value_bar;
  for (int q = 0; q < Q; ++q)
    s_bar.t[q] = lane_bar[q].size() ? lane_bar[q] : ArrX::Zero(value_bar.size());

  RhsTape rt1, rt2, rt3, rt4;
  FlowState k1, k2, k3, k4;
  for (int step = n - 1; step >= 0; --step) {
    const FlowState& s = tape.step_start[step];
    // Re-run the step to rebuild the stage tapes.
    eval_phi(spec, in, s, rt1, k1);
    const FlowState z2 = axpy(s, 0.5 * dt, k1);
    eval_phi(spec, in, z2, rt2, k2);
    const FlowState z3 = axpy(s, 0.5 * dt, k2);
    eval_phi(spec, in, z3, rt3, k3);
    const FlowState z4 = axpy(s, dt, k3);
    eval_phi(spec, in, z4, rt4, k4);

    auto scaled = [&](Real c) {
      FlowState r;
      r.lanes = Q;
      r.h = c * s_bar.h;
      for (int q = 0; q < Q; ++q) r.t[q] = c * s_bar.t[q];
      return r;
    };
    FlowState kb1 = scaled(dt / 6.0);
    FlowState kb2 = scaled(dt / 3.0);
    FlowState kb3 = scaled(dt / 3.0);
    FlowState kb4 = scaled(dt / 6.0);

    auto stage_vjp = [&](const RhsTape& rt, const FlowState& k_bar, FlowState& z_bar) {
      std::array<ArrX, 2> tf_bar, th_bar;
      for (int q = 0; q < Q; ++q) tf_bar[q] = k_bar.t[q];
      z_bar.lanes = Q;
      rhs_backward(spec, in, rt, k_bar.h, tf_bar, z_bar.h, th_bar, theta_bar, u_bar);
      for (int q = 0; q < Q; ++q) z_bar.t[q] = th_bar[q];
    };

    FlowState z_bar;
    stage_vjp(rt4, kb4, z_bar);  // z4 = s + dt k3
    s_bar.h += z_bar.h;
    kb3.h += dt * z_bar.h;
    for (int q = 0; q < Q; ++q) {
      s_bar.t[q] += z_bar.t[q];
      kb3.t[q] += dt * z_bar.t[q];
    }
    stage_vjp(rt3, kb3, z_bar);  // z3 = s + dt/2 k2
    s_bar.h += z_bar.h;
    kb2.h += 0.5 * dt * z_bar.h;
    for (int q = 0; q < Q; ++q) {
      s_bar.t[q] += z_bar.t[q];
      kb2.t[q] += 0.5 * dt * z_bar.t[q];
    }
    stage_vjp(rt2, kb2, z_bar);  // z2 = s + dt/2 k1
    s_bar.h += z_bar.h;
    kb1.h += 0.5 * dt * z_bar.h;
    for (int q = 0; q < Q; ++q) {
      s_bar.t[q] += z_bar.t[q];
      kb1.t[q] += 0.5 * dt * z_bar.t[q];
    }
    stage_vjp(rt1, kb1, z_bar);  // z1 = s
    s_bar.h += z_bar.h;
    for (int q = 0; q < Q; ++q) s_bar.t[q] += z_bar.t[q];
  }
  // s_bar now holds adjoints of x0/seeds; the kinematic inputs are frozen so
  // these are intentionally dropped.
}

}  // namespace hf
