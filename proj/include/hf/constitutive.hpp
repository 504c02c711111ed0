// Polyconvex neural-ODE constitutive model.
//
// The strain energy is a sum of per-invariant potentials,
//   Psi = sum_k Psi_k,   dPsi_k/dI_k = g_k(I_k - I_k_ref),
// where each derivative g_k is the normalized time-1 map of a scalar ODE flow
//   dh/dt = f_k(h; theta_k),  g_k(y) = flow_k(y) - flow_k(0),
// integrated with fixed-step RK4.  Monotonicity of the flow map in its initial
// condition (ODE trajectories cannot cross) makes every g_k increasing with
// g_k(0) = 0, so each Psi_k is convex with its minimum at the reference state.
//
// The term registry covers I1, I2, I4v, I4w, the convex combinations
// alpha*Ii + (1-alpha)*Ij over invariant pairs, and J.  The registry order is
// part of the model definition and fixes the parameter packing.
#pragma once

#include <string>
#include <vector>

#include "hf/kinematics.hpp"
#include "hf/types.hpp"

namespace hf {

enum class InvariantId { I1, I2, I4v, I4w, J };

const char* to_string(InvariantId id);
InvariantId invariant_from_string(const std::string& s);

// One registry entry: either a single invariant or a fixed convex mix of two.
struct TermSpec {
  InvariantId first = InvariantId::I1;
  InvariantId second = InvariantId::I1;
  bool mixed = false;
  Real alpha = 0.5;  // weight of `first` when mixed; fixed, not trainable

  std::string name() const;
  // Value and reference value of the (possibly mixed) invariant.
  Real value(const Invariants& inv) const;
  Real reference() const;
};

// Isotropic + anisotropic + volumetric registry with all j > i mixes.
std::vector<TermSpec> default_registry();

// ---------------------------------------------------------------------------
// Model definition: registry, per-term flow architecture, integration steps,
// structural directions.  Parameter count L follows from the flow widths.
// ---------------------------------------------------------------------------

struct NodeModelSpec {
  std::vector<TermSpec> terms = default_registry();
  std::vector<int> flow_widths = {1, 4, 4, 4, 1};
  int n_rk4_steps = 10;
  StructuralDirections dirs;

  int n_terms() const { return static_cast<int>(terms.size()); }
  int params_per_flow() const;
  int n_params() const { return n_terms() * params_per_flow(); }
  // Offset of term k's parameter slice inside the flat parameter vector.
  int term_offset(int k) const { return k * params_per_flow(); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Scalar flow evaluation (single point).  theta is the parameter slice of one
// flow, laid out per layer as column-major W followed by b.
// ---------------------------------------------------------------------------

// Right-hand side f(h; theta) of one scalar flow.
Real flow_rhs(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta, Real h);

// Time-1 RK4 flow map h(0) = x0 -> h(1).
Real node_flow(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta, Real x0);

// Normalized potential derivative g(y) = flow(y) - flow(0) for shifted
// invariant y = I - I_ref.
Real potential_derivative(const NodeModelSpec& spec, const Eigen::Ref<const VecX>& theta,
                          Real y);

// ---------------------------------------------------------------------------
// Material point model: a model definition plus one flat parameter vector
// Theta (the quantity predicted by the hyper-network).
// ---------------------------------------------------------------------------

struct MaterialPointModel {
  NodeModelSpec spec;
  VecX theta;  // size spec.n_params()

  MaterialPointModel() = default;
  explicit MaterialPointModel(NodeModelSpec s)
      : spec(std::move(s)), theta(VecX::Zero(spec.n_params())) {}
  MaterialPointModel(NodeModelSpec s, VecX th) : spec(std::move(s)), theta(std::move(th)) {
    if (theta.size() != spec.n_params())
      throw DimensionError("MaterialPointModel: parameter vector size mismatch");
  }

  Eigen::Ref<const VecX> term_params(int k) const {
    return theta.segment(spec.term_offset(k), spec.params_per_flow());
  }
};

// Strain energy Psi(F); per-term integrals evaluated with 16-point
// Gauss-Legendre quadrature from the reference invariant to the current one.
// Psi(I) = 0 by construction.
Real strain_energy(const MaterialPointModel& model, const Mat3& F);

// First Piola-Kirchhoff stress P = 2 F dPsi/dC with the analytic invariant
// derivatives dI1/dC = I, dI2/dC = I1*I - C, dI4/dC = dir (x) dir,
// dJ/dC = (J/2) C^{-1}.
Mat3 pk1_stress(const MaterialPointModel& model, const Mat3& F);

// In-plane stress of the lifted model: d/dF2 of Psi(lift(F2)).  For the
// incompressible plane-stress lift this includes the thickness-relief term
// (the F33(F2) dependence); for plane strain it is the plain 2x2 block.
Mat2 pk1_stress_inplane(const MaterialPointModel& model, const Mat2& F2, LiftMode mode);

}  // namespace hf
