// Batched in-plane stress pipeline.
//
// For a batch of evaluation points with frozen in-plane deformation gradients
// F2 (and optionally their frozen spatial derivatives dF2/dX_a), this module
// precomputes per registry term k the lifted invariant input
//   y_k = I_k(lift(F2)) - I_k_ref,
// its spatial rates, and the exact gradient T_k = dI_k/dF2 of the lifted
// invariant (thickness-relief chain term included) together with the
// directional derivatives of T_k along dF2/dX_a.  Because
//   P2 = dPsi/dF2 = sum_k g_k T_k,
//   dP2/dX_a = sum_k (dg_k/dX_a T_k + g_k dT_k/dX_a),
// the only trainable quantities entering the stress and its divergence are
// the flow outputs g_k and their spatial rates -- everything else is frozen
// and computed once, so the per-epoch cost reduces to flow and network work.
//
// RegistryFlows runs the whole term registry through the batched flow engine
// (value plus baseline integration per term) and routes adjoints back to the
// per-point parameter matrices produced by the hyper-network.
#pragma once

#include <array>
#include <vector>

#include "hf/flow_bundle.hpp"
#include "hf/types.hpp"

namespace hf {

// Component order for 2x2 tensors flattened to 4 columns: (11, 12, 21, 22).
// Gradient blocks stack the two axes: columns [0,4) are d/dX1, [4,8) d/dX2.

struct TermKinematics {
  ArrX y;                                    // shifted invariant (N)
  std::array<ArrX, 2> y_dot;                 // dy/dX_a (empty without gradients)
  std::array<ArrX, 4> T;                     // dI/dF2 components
  std::array<std::array<ArrX, 4>, 2> T_dot;  // d(T)/dX_a
};

struct StressKinematics {
  int n = 0;
  bool with_gradients = false;
  LiftMode mode = LiftMode::IncompressiblePlaneStress;
  std::vector<TermKinematics> terms;
  Eigen::Array<bool, Eigen::Dynamic, 1> valid;  // det F2 > 0
  int n_invalid = 0;
};

// F2: N x 4; f_grad (optional): N x 8 spatial derivative blocks.  Points with
// non-positive in-plane determinant are flagged invalid and evaluated at the
// identity instead so downstream arithmetic stays finite.
StressKinematics build_stress_kinematics(const NodeModelSpec& spec, LiftMode mode,
                                         const MatX& F2, const MatX* f_grad);

// ---------------------------------------------------------------------------
// RegistryFlows: all registry terms through the flow engine.
// Parameter layout convention: the hyper-network emits Theta as (L x Nx)
// (one column per spatial point).  The flow engine wants per-term (N x Lk)
// blocks where N = m_steps * Nx rows replicate the spatial points once per
// load step (row j*Nx + i is point i at step j).
// ---------------------------------------------------------------------------

class RegistryFlows {
 public:
  RegistryFlows(NodeModelSpec spec, bool spatial_lanes);

  const NodeModelSpec& spec() const { return spec_; }
  bool spatial_lanes() const { return lanes_ > 0; }

  // theta/u columns are spatial points; they are replicated over m_steps.
  void load_parameters(const MatX& theta, const MatX* u0, const MatX* u1, int m_steps);

  void forward(const StressKinematics& kin);

  const ArrX& g(int k) const { return g_[k]; }
  const ArrX& ghat(int k, int axis) const { return ghat_[k][axis]; }

  // Adjoint entry point; g_bar/ghat_bar mirror g()/ghat().  Accumulates
  // parameter adjoints internally; fetch them with reduce_parameter_adjoints.
  void backward(const std::vector<ArrX>& g_bar,
                const std::vector<std::array<ArrX, 2>>& ghat_bar);

  // Sums the per-(point, step) adjoints over steps back into hyper layout
  // (L x Nx).  Pass nullptr for lanes that were not loaded.
  void reduce_parameter_adjoints(MatX& theta_bar, MatX* u0_bar, MatX* u1_bar) const;

 private:
  NodeModelSpec spec_;
  int lanes_ = 0;
  int m_steps_ = 0, n_x_ = 0;
  // Main integrations run over all N = m_steps * n_x rows; the zero-input
  // baseline depends only on the spatial point, so it runs once per point
  // (n_x rows) and is tiled across steps.
  std::vector<MatX> theta_term_;                 // per term, N x Lk
  std::array<std::vector<MatX>, 2> u_term_;
  std::vector<MatX> base_theta_term_;            // per term, n_x x Lk
  std::array<std::vector<MatX>, 2> base_u_term_;
  std::vector<MatX> theta_bar_term_;
  std::array<std::vector<MatX>, 2> u_bar_term_;
  std::vector<MatX> base_theta_bar_term_;
  std::array<std::vector<MatX>, 2> base_u_bar_term_;
  std::vector<ArrX> g_;
  std::vector<std::array<ArrX, 2>> ghat_;
  struct TermTapes {
    FlowTape main, base;
  };
  std::vector<TermTapes> tapes_;
  bool have_u_ = false;
};

// ---------------------------------------------------------------------------
// Assembly of stress / divergence from flow outputs (normalized units).
// ---------------------------------------------------------------------------

// P(N x 4) = sum_k g_k T_k; invalid points yield zero rows.
MatX assemble_stress(const StressKinematics& kin, const RegistryFlows& flows);

// Divergence rows (r1, r2) with r_b = dP_b1/dX1 + dP_b2/dX2.
MatX assemble_divergence(const StressKinematics& kin, const RegistryFlows& flows);

// Adjoints: given P_bar (N x 4, may be empty) and div_bar (N x 2, may be
// empty), produce the flow-output adjoints for RegistryFlows::backward.
void assembly_adjoints(const StressKinematics& kin, const MatX& P_bar, const MatX& div_bar,
                       std::vector<ArrX>& g_bar, std::vector<std::array<ArrX, 2>>& ghat_bar);

// Single-point convenience used by probes and diagnostics (N = 1 batch).
struct PointStress {
  Mat2 P = Mat2::Zero();
  Vec2 divergence = Vec2::Zero();
  bool valid = true;
};
PointStress stress_at_point(const NodeModelSpec& spec, LiftMode mode, const VecX& theta,
                            const Mat2& F2, const std::array<Mat2, 2>* f_grad = nullptr,
                            const std::array<VecX, 2>* theta_grad = nullptr);

}  // namespace hf
