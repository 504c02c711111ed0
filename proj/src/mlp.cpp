#include "hf/mlp.hpp"

#include <cmath>

namespace hf {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigurationError("Mlp: need at least two layer widths");
  for (int w : widths_)
    if (w < 1) throw ConfigurationError("Mlp: layer widths must be positive");
  int offset = 0;
  for (int l = 0; l < n_layers(); ++l) {
    w_offset_.push_back(offset);
    offset += widths_[l + 1] * widths_[l];
    b_offset_.push_back(offset);
    offset += widths_[l + 1];
  }
  params_ = VecX::Zero(offset);
}

void Mlp::init(Rng& rng, Real final_layer_std) {
  for (int l = 0; l < n_layers(); ++l) {
    const int fan_in = widths_[l], fan_out = widths_[l + 1];
    Real std = std::sqrt(2.0 / (fan_in + fan_out));
    if (l == n_layers() - 1 && final_layer_std >= 0.0) std = final_layer_std;
    weight(params_, l) = normal_matrix(rng, fan_out, fan_in, std);
    bias(params_, l).setZero();
  }
}

Eigen::Map<MatX> Mlp::weight(VecX& flat, int layer) const {
  return Eigen::Map<MatX>(flat.data() + w_offset_[layer], widths_[layer + 1], widths_[layer]);
}
Eigen::Map<const MatX> Mlp::weight(const VecX& flat, int layer) const {
  return Eigen::Map<const MatX>(flat.data() + w_offset_[layer], widths_[layer + 1],
                                widths_[layer]);
}
Eigen::Map<VecX> Mlp::bias(VecX& flat, int layer) const {
  return Eigen::Map<VecX>(flat.data() + b_offset_[layer], widths_[layer + 1]);
}
Eigen::Map<const VecX> Mlp::bias(const VecX& flat, int layer) const {
  return Eigen::Map<const VecX>(flat.data() + b_offset_[layer], widths_[layer + 1]);
}

MatX Mlp::eval(const MatX& x) const {
  if (x.rows() != input_width()) throw DimensionError("Mlp::eval: input width mismatch");
  MatX h = x;
  for (int l = 0; l < n_layers(); ++l) {
    MatX a = (weight(params_, l) * h).colwise() + bias(params_, l);
    if (l + 1 < n_layers())
      h = a.array().tanh().matrix();
    else
      h = std::move(a);
  }
  return h;
}

void Mlp::forward(const MatX& x, const std::vector<MatX>& x_dot, Tape& tape, MatX& y,
                  std::vector<MatX>& y_dot) const {
  if (x.rows() != input_width()) throw DimensionError("Mlp::forward: input width mismatch");
  const int q_lanes = static_cast<int>(x_dot.size());
  const int L = n_layers();

  tape.h.assign(L + 1, MatX());
  tape.a_dot.assign(q_lanes, std::vector<MatX>(L));
  tape.h_dot.assign(q_lanes, std::vector<MatX>(L + 1));
  tape.h[0] = x;
  for (int q = 0; q < q_lanes; ++q) tape.h_dot[q][0] = x_dot[q];

  for (int l = 0; l < L; ++l) {
    const auto W = weight(params_, l);
    MatX a = (W * tape.h[l]).colwise() + bias(params_, l);
    const bool hidden = (l + 1 < L);
    if (hidden) {
      tape.h[l + 1] = a.array().tanh().matrix();
      // sigma'(a) = 1 - tanh(a)^2, computed from the stored post-activation
      const auto sp = (1.0 - tape.h[l + 1].array().square());
      for (int q = 0; q < q_lanes; ++q) {
        tape.a_dot[q][l] = W * tape.h_dot[q][l];
        tape.h_dot[q][l + 1] = (sp * tape.a_dot[q][l].array()).matrix();
      }
    } else {
      tape.h[l + 1] = std::move(a);
      for (int q = 0; q < q_lanes; ++q) {
        tape.a_dot[q][l] = W * tape.h_dot[q][l];
        tape.h_dot[q][l + 1] = tape.a_dot[q][l];
      }
    }
  }
  y = tape.h[L];
  y_dot.assign(q_lanes, MatX());
  for (int q = 0; q < q_lanes; ++q) y_dot[q] = tape.h_dot[q][L];
}

void Mlp::backward(const Tape& tape, const MatX& y_bar, const std::vector<MatX>& y_dot_bar,
                   VecX& grad) const {
  const int L = n_layers();
  const int q_lanes = tape.lanes();
  if (static_cast<int>(y_dot_bar.size()) != q_lanes)
    throw DimensionError("Mlp::backward: tangent adjoint count mismatch");
  if (grad.size() != params_.size()) throw DimensionError("Mlp::backward: grad size mismatch");

  MatX h_bar = y_bar;
  std::vector<MatX> h_dot_bar(q_lanes);
  for (int q = 0; q < q_lanes; ++q) h_dot_bar[q] = y_dot_bar[q];

  for (int l = L - 1; l >= 0; --l) {
    const auto W = weight(params_, l);
    const bool hidden = (l + 1 < L);

    // Adjoints of the pre-activation a_l for the value lane and each tangent
    // lane.  For hidden layers the tangent lanes couple back into the value
    // lane through sigma''(a) = -2 tanh(a) sigma'(a).
    MatX a_bar;
    std::vector<MatX> a_dot_bar(q_lanes);
    if (hidden) {
      const auto H = tape.h[l + 1].array();
      const auto sp = 1.0 - H.square();
      a_bar = (sp * h_bar.array()).matrix();
      for (int q = 0; q < q_lanes; ++q) {
        a_dot_bar[q] = (sp * h_dot_bar[q].array()).matrix();
        a_bar.array() +=
            (-2.0 * H * sp) * tape.a_dot[q][l].array() * h_dot_bar[q].array();
      }
    } else {
      a_bar = h_bar;
      for (int q = 0; q < q_lanes; ++q) a_dot_bar[q] = h_dot_bar[q];
    }

    auto gW = weight(grad, l);
    auto gb = bias(grad, l);
    gW.noalias() += a_bar * tape.h[l].transpose();
    gb.noalias() += a_bar.rowwise().sum();
    for (int q = 0; q < q_lanes; ++q)
      gW.noalias() += a_dot_bar[q] * tape.h_dot[q][l].transpose();

    if (l > 0) {
      h_bar.noalias() = W.transpose() * a_bar;
      for (int q = 0; q < q_lanes; ++q)
        h_dot_bar[q] = W.transpose() * a_dot_bar[q];
    }
  }
}

}  // namespace hf
