#include "hf/hyper_field.hpp"

namespace hf {

void HyperConfig::validate() const {
  if (n_freq < 1) throw ConfigurationError("HyperConfig: n_freq must be >= 1");
  if (!(sigma_ff > 0)) throw ConfigurationError("HyperConfig: sigma_ff must be > 0");
  if (!(final_layer_std >= 0))
    throw ConfigurationError("HyperConfig: final_layer_std must be >= 0");
}

namespace {

std::vector<int> trunk_widths(const NodeModelSpec& spec, const HyperConfig& cfg) {
  std::vector<int> w;
  w.push_back(2 * cfg.n_freq);
  for (int h : cfg.hidden) w.push_back(h);
  w.push_back(spec.n_params());
  return w;
}

}  // namespace

HyperNetworkField::HyperNetworkField(NodeModelSpec spec, HyperConfig cfg, Rng& rng)
    : spec_(std::move(spec)), cfg_(std::move(cfg)) {
  spec_.validate();
  cfg_.validate();
  fmap_ = FourierFeatureMap(cfg_.n_freq, cfg_.sigma_ff, rng);
  trunk_ = Mlp(trunk_widths(spec_, cfg_));
  trunk_.init(rng, cfg_.final_layer_std);
}

HyperNetworkField::HyperNetworkField(NodeModelSpec spec, HyperConfig cfg, MatX B,
                                     VecX params)
    : spec_(std::move(spec)), cfg_(std::move(cfg)), fmap_(std::move(B)),
      trunk_(trunk_widths(spec_, cfg_)) {
  spec_.validate();
  cfg_.validate();
  if (fmap_.n_frequencies() != cfg_.n_freq)
    throw ConfigurationError("HyperNetworkField: frequency matrix does not match config");
  if (params.size() != trunk_.n_params())
    throw ConfigurationError("HyperNetworkField: parameter vector does not match trunk");
  trunk_.parameters() = std::move(params);
}

MatX HyperNetworkField::eval(const MatX& coords) const {
  return trunk_.eval(fmap_.features(coords));
}

VecX HyperNetworkField::eval_point(const Vec2& X) const {
  return eval(X.transpose()).col(0);
}

void HyperNetworkField::forward(const MatX& coords, bool with_lanes, Mlp::Tape& tape,
                                MatX& theta, std::array<MatX, 2>& u) const {
  std::vector<MatX> lanes;
  if (with_lanes) {
    lanes.push_back(fmap_.feature_tangent(coords, 0));
    lanes.push_back(fmap_.feature_tangent(coords, 1));
  }
  std::vector<MatX> y_dot;
  trunk_.forward(fmap_.features(coords), lanes, tape, theta, y_dot);
  if (with_lanes) {
    u[0] = std::move(y_dot[0]);
    u[1] = std::move(y_dot[1]);
  } else {
    u[0].resize(0, 0);
    u[1].resize(0, 0);
  }
}

void HyperNetworkField::backward(const Mlp::Tape& tape, const MatX& theta_bar,
                                 const std::array<MatX, 2>& u_bar, VecX& grad) const {
  std::vector<MatX> y_dot_bar;
  if (u_bar[0].size() > 0) y_dot_bar = {u_bar[0], u_bar[1]};
  trunk_.backward(tape, theta_bar, y_dot_bar, grad);
}

void HyperNetworkField::set_constant_output(const VecX& theta) {
  if (theta.size() != n_output())
    throw DimensionError("HyperNetworkField: constant target size mismatch");
  VecX& p = trunk_.parameters();
  trunk_.bias(p, trunk_.n_layers() - 1) = theta;
}

}  // namespace hf
