// Hyper-network material field: a Fourier-feature coordinate network mapping
// material coordinates X to the flat parameter vector of the per-point
// constitutive registry.  The field is load-independent; spatial tangent
// lanes provide the exact derivatives of the emitted parameters needed by
// the divergence residual.
#pragma once

#include <array>
#include <vector>

#include "hf/constitutive.hpp"
#include "hf/fourier.hpp"
#include "hf/mlp.hpp"
#include "hf/types.hpp"

namespace hf {

struct HyperConfig {
  int n_freq = 40;             // trunk input is 2*n_freq
  Real sigma_ff = 5.0;
  std::vector<int> hidden = {40, 40};
  Real final_layer_std = 1e-3;  // small, so the initial field is near its bias

  void validate() const;
};

class HyperNetworkField {
 public:
  HyperNetworkField() = default;
  HyperNetworkField(NodeModelSpec spec, HyperConfig cfg, Rng& rng);
  HyperNetworkField(NodeModelSpec spec, HyperConfig cfg, MatX B, VecX params);

  const NodeModelSpec& spec() const { return spec_; }
  const HyperConfig& config() const { return cfg_; }
  const FourierFeatureMap& feature_map() const { return fmap_; }
  const Mlp& trunk() const { return trunk_; }
  Mlp& trunk() { return trunk_; }
  int n_output() const { return spec_.n_params(); }

  // Parameter field for a batch of points (one row of coords per point);
  // returns L x N, one column per point.
  MatX eval(const MatX& coords) const;
  VecX eval_point(const Vec2& X) const;

  // Forward pass keeping the tape for training; with_lanes also produces
  // u[a] = d(Theta)/dX_a (L x N each).
  void forward(const MatX& coords, bool with_lanes, Mlp::Tape& tape, MatX& theta,
               std::array<MatX, 2>& u) const;

  // Reverse pass matching forward(); accumulates into grad (trunk layout).
  // u_bar entries may be empty matrices when the forward ran without lanes.
  void backward(const Mlp::Tape& tape, const MatX& theta_bar,
                const std::array<MatX, 2>& u_bar, VecX& grad) const;

  // Exactly represent a spatially constant field: final-layer bias := theta;
  // the (small) final weights are left untouched.
  void set_constant_output(const VecX& theta);

 private:
  NodeModelSpec spec_;
  HyperConfig cfg_;
  FourierFeatureMap fmap_;
  Mlp trunk_;
};

}  // namespace hf
