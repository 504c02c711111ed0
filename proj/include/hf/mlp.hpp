// Dense multi-layer perceptron with tanh hidden layers and a linear output,
// batched over columns.  Besides the plain value pass it can carry up to two
// forward tangent lanes (directional derivatives of the input, e.g. d/dX1 and
// d/dX2) and provides the exact reverse pass for both the value lane and the
// tangent lanes, accumulating parameter gradients.  This is the workhorse
// behind the field interpolant and the hyper-network.
#pragma once

#include <vector>

#include "hf/rng.hpp"
#include "hf/types.hpp"

namespace hf {

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths);

  // Glorot-normal weights, zero biases; final_layer_std >= 0 overrides the
  // standard deviation of the last weight matrix (small values make the
  // initial output nearly bias-only).
  void init(Rng& rng, Real final_layer_std = -1.0);

  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int n_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int n_params() const { return static_cast<int>(params_.size()); }

  VecX& parameters() { return params_; }
  const VecX& parameters() const { return params_; }

  // Weight/bias views into an externally supplied flat vector with the same
  // layout as parameters() -- used both for the model and for gradients.
  Eigen::Map<MatX> weight(VecX& flat, int layer) const;
  Eigen::Map<const MatX> weight(const VecX& flat, int layer) const;
  Eigen::Map<VecX> bias(VecX& flat, int layer) const;
  Eigen::Map<const VecX> bias(const VecX& flat, int layer) const;

  // Forward state kept for the reverse pass.  h[l] are post-activation values
  // (h[0] is the input), one column per batch sample; per tangent lane q,
  // a_dot[q][l] and h_dot[q][l] are the pre-/post-activation tangents.
  struct Tape {
    std::vector<MatX> h;
    std::vector<std::vector<MatX>> a_dot, h_dot;
    int lanes() const { return static_cast<int>(a_dot.size()); }
  };

  // Value-only forward.
  MatX eval(const MatX& x) const;

  // Forward with optional tangent lanes; x_dot may hold 0, 1 or 2 input
  // tangent matrices (same shape as x).  Outputs: y plus one y_dot per lane.
  void forward(const MatX& x, const std::vector<MatX>& x_dot, Tape& tape,
               MatX& y, std::vector<MatX>& y_dot) const;

  // Reverse pass for the forward() above.  y_bar / y_dot_bar are adjoints of
  // y / y_dot; parameter gradients are accumulated into grad (layout of
  // parameters()).  Input adjoints are not produced (inputs are data).
  void backward(const Tape& tape, const MatX& y_bar,
                const std::vector<MatX>& y_dot_bar, VecX& grad) const;

 private:
  std::vector<int> widths_;
  std::vector<int> w_offset_, b_offset_;
  VecX params_;
};

}  // namespace hf
