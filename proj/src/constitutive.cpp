#include "hf/constitutive.hpp"

#include <cmath>

namespace hf {
namespace {

// 16-point Gauss-Legendre abscissae/weights on [-1, 1].
constexpr int kQuadOrder = 16;
constexpr Real kQuadX[kQuadOrder] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr Real kQuadW[kQuadOrder] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

}  // namespace

const char* to_string(InvariantId id) {
  switch (id) {
    case InvariantId::I1: return "I1";
    case InvariantId::I2: return "I2";
    case InvariantId::I4v: return "I4v";
    case InvariantId::I4w: return "I4w";
    case InvariantId::J: return "J";
  }
  return "?";
}

InvariantId invariant_from_string(const std::string& s) {
  if (s == "I1") return InvariantId::I1;
  if (s == "I2") return InvariantId::I2;
  if (s == "I4v") return InvariantId::I4v;
  if (s == "I4w") return InvariantId::I4w;
  if (s == "J") return InvariantId::J;
  throw ConfigurationError("unknown invariant id: " + s);
}

std::string TermSpec::name() const {
  if (!mixed) return to_string(first);
  return std::string("mix(") + to_string(first) + "," + to_string(second) + ")";
}

namespace {
Real pick(const Invariants& inv, InvariantId id) {
  switch (id) {
    case InvariantId::I1: return inv.I1;
    case InvariantId::I2: return inv.I2;
    case InvariantId::I4v: return inv.I4v;
    case InvariantId::I4w: return inv.I4w;
    case InvariantId::J: return inv.J;
  }
  return 0.0;
}
}  // namespace

Real TermSpec::value(const Invariants& inv) const {
  if (!mixed) return pick(inv, first);
  return alpha * pick(inv, first) + (1.0 - alpha) * pick(inv, second);
}

Real TermSpec::reference() const {
  const Invariants ref = reference_invariants();
  if (!mixed) return pick(ref, first);
  return alpha * pick(ref, first) + (1.0 - alpha) * pick(ref, second);
}

std::vector<TermSpec> default_registry() {
  using Id = InvariantId;
  std::vector<TermSpec> terms;
  for (Id id : {Id::I1, Id::I2, Id::I4v, Id::I4w}) terms.push_back({id, id, false, 0.5});
  const Id pool[4] = {Id::I1, Id::I2, Id::I4v, Id::I4w};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) terms.push_back({pool[i], pool[j], true, 0.5});
  terms.push_back({Id::J, Id::J, false, 0.5});
  return terms;
}

int NodeModelSpec::params_per_flow() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < flow_widths.size(); ++l)
    n += flow_widths[l + 1] * flow_widths[l] + flow_widths[l + 1];
  return n;
}

void NodeModelSpec::validate() const {
  if (terms.empty()) throw ConfigurationError("NodeModelSpec: empty term registry");
  if (flow_widths.size() < 2 || flow_widths.front() != 1 || flow_widths.back() != 1)
    throw ConfigurationError("NodeModelSpec: flow widths must run from 1 to 1");
  for (int w : flow_widths)
    if (w < 1 || w > 64)
      throw ConfigurationError("NodeModelSpec: flow widths must lie in [1, 64]");
  if (n_rk4_steps < 1) throw ConfigurationError("NodeModelSpec: need at least one RK4 step");
  for (const TermSpec& t : terms)
    if (t.mixed && !(t.alpha > 0.0 && t.alpha < 1.0))
      throw ConfigurationError("NodeModelSpec: mixed-term alpha must lie in (0, 1)");
  // the fixed I4 reference value assumes unit-length structural directions
  if (std::abs(dirs.v.norm() - 1.0) > 1e-12 || std::abs(dirs.w.norm() - 1.0) > 1e-12)
    throw ConfigurationError("NodeModelSpec: structural directions must be unit vectors");
}

Real flow_rhs(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta, Real h) {
  const std::vector<int>& w = spec.flow_widths;
  Real buf_a[64], buf_b[64];
  Real* cur = buf_a;
  Real* nxt = buf_b;
  cur[0] = h;
  int offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const int n_in = w[l], n_out = w[l + 1];
    const bool hidden = (l + 2 < w.size());
    for (int i = 0; i < n_out; ++i) {
      Real a = theta[offset + n_out * n_in + i];  // bias
      for (int j = 0; j < n_in; ++j) a += theta[offset + j * n_out + i] * cur[j];
      nxt[i] = hidden ? std::tanh(a) : a;
    }
    offset += n_out * n_in + n_out;
    std::swap(cur, nxt);
  }
  return cur[0];
}

Real node_flow(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta, Real x0) {
  const int n = spec.n_rk4_steps;
  const Real dt = 1.0 / n;
  Real h = x0;
  for (int s = 0; s < n; ++s) {
    const Real k1 = flow_rhs(spec, theta, h);
    const Real k2 = flow_rhs(spec, theta, h + 0.5 * dt * k1);
    const Real k3 = flow_rhs(spec, theta, h + 0.5 * dt * k2);
    const Real k4 = flow_rhs(spec, theta, h + dt * k3);
    h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!std::isfinite(h))
    throw NumericRangeError("node_flow: non-finite state after integration");
  return h;
}

Real potential_derivative(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta,
                          Real y) {
  return node_flow(spec, theta, y) - node_flow(spec, theta, 0.0);
}

Real strain_energy(const MaterialPointModel& model, const Mat3& F) {
  model.spec.validate();
  const Invariants inv = invariants(F, model.spec.dirs);
  Real psi = 0.0;
  for (int k = 0; k < model.spec.n_terms(); ++k) {
    const TermSpec& term = model.spec.terms[k];
    const Real y = term.value(inv) - term.reference();
    // int_0^y g(s) ds by Gauss-Legendre on the shifted variable
    const Real half = 0.5 * y;
    Real acc = 0.0;
    for (int q = 0; q < kQuadOrder; ++q)
      acc += kQuadW[q] *
             potential_derivative(model.spec, model.term_params(k), half + half * kQuadX[q]);
    psi += half * acc;
  }
  return psi;
}

Mat3 pk1_stress(const MaterialPointModel& model, const Mat3& F) {
  model.spec.validate();
  const Invariants inv = invariants(F, model.spec.dirs);

  // Accumulate dPsi/dI per invariant channel; mixed terms contribute through
  // the chain rule with their fixed convex weights.
  Real c[5] = {0, 0, 0, 0, 0};
  for (int k = 0; k < model.spec.n_terms(); ++k) {
    const TermSpec& term = model.spec.terms[k];
    const Real g =
        potential_derivative(model.spec, model.term_params(k), term.value(inv) - term.reference());
    if (!term.mixed) {
      c[static_cast<int>(term.first)] += g;
    } else {
      c[static_cast<int>(term.first)] += term.alpha * g;
      c[static_cast<int>(term.second)] += (1.0 - term.alpha) * g;
    }
  }

  const Mat3 C = F.transpose() * F;
  const Vec3& v = model.spec.dirs.v;
  const Vec3& w = model.spec.dirs.w;
  Mat3 dpsi_dc = Mat3::Zero();
  dpsi_dc += c[0] * Mat3::Identity();
  dpsi_dc += c[1] * (inv.I1 * Mat3::Identity() - C);
  dpsi_dc += c[2] * (v * v.transpose());
  dpsi_dc += c[3] * (w * w.transpose());
  dpsi_dc += c[4] * (0.5 * inv.J) * C.inverse();
  return 2.0 * F * dpsi_dc;
}

Mat2 pk1_stress_inplane(const MaterialPointModel& model, const Mat2& F2, LiftMode mode) {
  const Mat3 F3 = lift_plane<Real>(F2, mode);
  const Mat3 P3 = pk1_stress(model, F3);
  Mat2 P2 = P3.topLeftCorner<2, 2>();
  if (mode == LiftMode::IncompressiblePlaneStress) {
    // d(F33)/dF2 = -(1/det) F2^{-T}; add P33 * dF33/dF2
    const Real det = F2.determinant();
    Mat2 f2it;  // F2^{-T}
    f2it << F2(1, 1), -F2(1, 0), -F2(0, 1), F2(0, 0);
    f2it /= det;
    P2 -= P3(2, 2) / det * f2it;
  }
  return P2;
}

}  // namespace hf
