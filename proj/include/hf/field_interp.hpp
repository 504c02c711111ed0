// Continuous interpolation of a discrete deformation-gradient series by a
// Fourier-feature coordinate network: (X, t) -> F2.  The network predicts the
// deviation from the identity, so a freshly initialized model evaluates close
// to F = I everywhere.  After fitting, the model provides exact spatial
// derivatives of F (needed by the divergence residual) through forward
// tangent lanes rather than numerical differencing.
#pragma once

#include <utility>
#include <vector>

#include "hf/fourier.hpp"
#include "hf/mlp.hpp"
#include "hf/types.hpp"

namespace hf {

struct InterpolantConfig {
  int n_freq = 40;            // Fourier rows; trunk input is 2*n_freq + 1
  Real sigma_ff = 10.0;       // frequency scale (cycles per unit length)
  std::vector<int> hidden = {40, 40};
  int epochs = 4000;
  Real learning_rate = 1e-3;
  int record_every = 10;      // loss-history granularity

  void validate() const;
};

class ContinuousFieldModel {
 public:
  ContinuousFieldModel() = default;

  // Fresh model: frequencies and trunk weights drawn from rng, then frozen.
  ContinuousFieldModel(InterpolantConfig cfg, Rng& rng);

  // Restore from checkpoint data.
  ContinuousFieldModel(InterpolantConfig cfg, MatX B, VecX params);

  const InterpolantConfig& config() const { return cfg_; }
  const FourierFeatureMap& feature_map() const { return fmap_; }
  const Mlp& trunk() const { return trunk_; }
  Mlp& trunk() { return trunk_; }

  Real final_loss() const { return final_loss_; }
  const std::vector<std::pair<int, Real>>& history() const { return history_; }

  // Full-batch fit of the mean squared Frobenius error over all (node, step)
  // samples; deterministic given the construction rng.  Cosine learning-rate
  // decay from learning_rate to a tenth of it.
  void fit(const FieldSnapshotSeries& defgrad);

  Mat2 eval(const Vec2& X, Real t) const;
  void eval_with_gradient(const Vec2& X, Real t, Mat2& F, std::array<Mat2, 2>& dF) const;

  // Batched tables over a coordinate set and load steps, step-major rows
  // (row j*N + i holds point i at step j), components (F11, F12, F21, F22);
  // the gradient table stacks d/dX1 in columns [0,4) and d/dX2 in [4,8).
  MatX eval_table(const MatX& coords, const std::vector<Real>& steps) const;
  void eval_table_with_gradient(const MatX& coords, const std::vector<Real>& steps,
                                MatX& F2, MatX& f_grad) const;

 private:
  MatX assemble_inputs(const MatX& coords, const std::vector<Real>& steps,
                       const MatX& features) const;

  InterpolantConfig cfg_;
  FourierFeatureMap fmap_;
  Mlp trunk_;
  Real final_loss_ = -1.0;
  std::vector<std::pair<int, Real>> history_;
};

}  // namespace hf
