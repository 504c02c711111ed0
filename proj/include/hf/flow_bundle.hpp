// Batched scalar-flow integration with per-point parameters and an exact
// reverse pass.
//
// One flow integrates dh/dt = f(h; theta) with fixed-step RK4 over t in
// [0, 1], where f is a tiny tanh MLP whose parameters differ per batch point
// (they come from the hyper-network).  Besides the value lane the integrator
// can carry up to two combined tangent lanes; lane a propagates the
// directional derivative of h under the simultaneous perturbation
//   (x0 -> x0 + eps * seed_a,  theta -> theta + eps * u_a),
// i.e. the spatial derivative of the flow output when seed_a = dy/dX_a and
// u_a = dtheta/dX_a.  The reverse pass consumes adjoints of the value and
// lane outputs and accumulates exact adjoints of theta and u (second-order
// terms through tanh'' included).  Adjoints of x0/seed are not produced: the
// kinematic inputs are frozen while the material field trains.
//
// Storage layout: theta and u are (N x Lk) column-major, so each parameter
// index is a contiguous array over the batch (structure-of-arrays); per layer
// the slice holds column-major W followed by b.
#pragma once

#include <array>
#include <vector>

#include "hf/constitutive.hpp"
#include "hf/types.hpp"

namespace hf {

struct FlowState {
  ArrX h;
  std::array<ArrX, 2> t;
  int lanes = 0;
};

struct FlowTape {
  std::vector<FlowState> step_start;  // state at the start of each RK4 step
  int n = 0;
};

struct FlowInputs {
  const MatX* theta = nullptr;              // N x Lk
  std::array<const MatX*, 2> u = {nullptr, nullptr};
  int lanes = 0;
};

// Integrates the flow from x0 with lane seeds; fills tape, value = h(1) and
// lane_out[a] = lane tangent at t = 1.
void flow_forward(const NodeModelSpec& spec, const FlowInputs& in, const ArrX& x0,
                  const std::array<ArrX, 2>& seed, FlowTape& tape, ArrX& value,
                  std::array<ArrX, 2>& lane_out);

// Reverse pass; value_bar / lane_bar are adjoints of the forward outputs.
// theta_bar (N x Lk) and u_bar[a] are accumulated into.
void flow_backward(const NodeModelSpec& spec, const FlowInputs& in, const FlowTape& tape,
                   const ArrX& value_bar, const std::array<ArrX, 2>& lane_bar,
                   MatX& theta_bar, std::array<MatX*, 2> u_bar);

}  // namespace hf
