#include "hf/field_interp.hpp"

#include <cmath>

#include "hf/adam.hpp"

namespace hf {

void InterpolantConfig::validate() const {
  if (n_freq < 1) throw ConfigurationError("InterpolantConfig: n_freq must be >= 1");
  if (!(sigma_ff > 0)) throw ConfigurationError("InterpolantConfig: sigma_ff must be > 0");
  if (epochs < 1) throw ConfigurationError("InterpolantConfig: epochs must be >= 1");
  if (!(learning_rate > 0))
    throw ConfigurationError("InterpolantConfig: learning rate must be > 0");
  if (record_every < 1) throw ConfigurationError("InterpolantConfig: record_every must be >= 1");
}

namespace {

std::vector<int> trunk_widths(const InterpolantConfig& cfg) {
  std::vector<int> w;
  w.push_back(2 * cfg.n_freq + 1);  // features of X plus the load parameter
  for (int h : cfg.hidden) w.push_back(h);
  w.push_back(4);
  return w;
}

}  // namespace

ContinuousFieldModel::ContinuousFieldModel(InterpolantConfig cfg, Rng& rng)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  fmap_ = FourierFeatureMap(cfg_.n_freq, cfg_.sigma_ff, rng);
  trunk_ = Mlp(trunk_widths(cfg_));
  // Small final layer: the untrained model starts near F = I, which is the
  // correct reference state and keeps the first optimizer steps well scaled.
  trunk_.init(rng, 1e-3);
}

ContinuousFieldModel::ContinuousFieldModel(InterpolantConfig cfg, MatX B, VecX params)
    : cfg_(std::move(cfg)), fmap_(std::move(B)), trunk_(trunk_widths(cfg_)) {
  cfg_.validate();
  if (fmap_.n_frequencies() != cfg_.n_freq)
    throw ConfigurationError("ContinuousFieldModel: frequency matrix does not match config");
  if (params.size() != trunk_.n_params())
    throw ConfigurationError("ContinuousFieldModel: parameter vector does not match trunk");
  trunk_.parameters() = std::move(params);
}

MatX ContinuousFieldModel::assemble_inputs(const MatX& coords,
                                           const std::vector<Real>& steps,
                                           const MatX& features) const {
  const int n = static_cast<int>(coords.rows());
  const int m = static_cast<int>(steps.size());
  MatX in(trunk_.input_width(), m * n);
  for (int j = 0; j < m; ++j) {
    in.block(0, j * n, features.rows(), n) = features;
    // load parameter entered as its deviation from the reference value 1
    in.row(features.rows()).segment(j * n, n).setConstant(steps[j] - 1.0);
  }
  return in;
}

void ContinuousFieldModel::fit(const FieldSnapshotSeries& defgrad) {
  defgrad.validate();
  if (defgrad.components != 4)
    throw DimensionError("ContinuousFieldModel::fit: expected 4-component series");
  for (const MatX& v : defgrad.values)
    if (!v.allFinite())
      throw DataError("ContinuousFieldModel::fit: non-finite values in input series");

  const MatX coords = defgrad.grid.node_coords();
  const int n = static_cast<int>(coords.rows());
  const int m = defgrad.n_steps();
  const MatX in = assemble_inputs(coords, defgrad.steps, fmap_.features(coords));

  // Targets as deviation from the identity, one column per (node, step).
  MatX target(4, m * n);
  for (int j = 0; j < m; ++j) {
    target.block(0, j * n, 4, n) = defgrad.values[j].transpose();
    target.row(0).segment(j * n, n).array() -= 1.0;
    target.row(3).segment(j * n, n).array() -= 1.0;
  }

  const Real inv_count = 1.0 / static_cast<Real>(m * n);
  Adam opt(trunk_.n_params(), cfg_.learning_rate);
  VecX grad(trunk_.n_params());
  history_.clear();

  Mlp::Tape tape;
  MatX y;
  std::vector<MatX> y_dot;
  const std::vector<MatX> no_lanes;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    // cosine decay to a tenth of the initial rate
    const Real frac = static_cast<Real>(epoch) / cfg_.epochs;
    opt.set_learning_rate(cfg_.learning_rate *
                          (0.55 + 0.45 * std::cos(EIGEN_PI * frac)));

    trunk_.forward(in, no_lanes, tape, y, y_dot);
    const MatX r = y - target;
    const Real loss = r.squaredNorm() * inv_count;
    if (!std::isfinite(loss))
      throw OptimizationError("interpolant fit diverged at epoch " + std::to_string(epoch));
    if (epoch % cfg_.record_every == 0) history_.emplace_back(epoch, loss);
    final_loss_ = loss;

    grad.setZero();
    trunk_.backward(tape, 2.0 * inv_count * r, {}, grad);
    opt.step(trunk_.parameters(), grad);
  }
  // loss after the last update
  final_loss_ = (trunk_.eval(in) - target).squaredNorm() * inv_count;
  history_.emplace_back(cfg_.epochs, final_loss_);
}

MatX ContinuousFieldModel::eval_table(const MatX& coords,
                                      const std::vector<Real>& steps) const {
  const MatX in = assemble_inputs(coords, steps, fmap_.features(coords));
  MatX F2 = trunk_.eval(in).transpose();
  F2.col(0).array() += 1.0;
  F2.col(3).array() += 1.0;
  return F2;
}

void ContinuousFieldModel::eval_table_with_gradient(const MatX& coords,
                                                    const std::vector<Real>& steps,
                                                    MatX& F2, MatX& f_grad) const {
  const int n = static_cast<int>(coords.rows());
  const int m = static_cast<int>(steps.size());
  const MatX in = assemble_inputs(coords, steps, fmap_.features(coords));

  // Spatial tangent lanes: feature tangents with a zero row for the load
  // parameter (t does not vary with X).
  std::vector<MatX> lanes(2);
  for (int a = 0; a < 2; ++a) {
    const MatX ft = fmap_.feature_tangent(coords, a);
    lanes[a] = MatX::Zero(in.rows(), in.cols());
    for (int j = 0; j < m; ++j) lanes[a].block(0, j * n, ft.rows(), n) = ft;
  }

  Mlp::Tape tape;
  MatX y;
  std::vector<MatX> y_dot;
  trunk_.forward(in, lanes, tape, y, y_dot);

  F2 = y.transpose();
  F2.col(0).array() += 1.0;
  F2.col(3).array() += 1.0;
  f_grad.resize(m * n, 8);
  f_grad.leftCols(4) = y_dot[0].transpose();
  f_grad.rightCols(4) = y_dot[1].transpose();
}

Mat2 ContinuousFieldModel::eval(const Vec2& X, Real t) const {
  const MatX F2 = eval_table(X.transpose(), {t});
  Mat2 F;
  F << F2(0, 0), F2(0, 1), F2(0, 2), F2(0, 3);
  return F;
}

void ContinuousFieldModel::eval_with_gradient(const Vec2& X, Real t, Mat2& F,
                                              std::array<Mat2, 2>& dF) const {
  MatX F2, G;
  eval_table_with_gradient(X.transpose(), {t}, F2, G);
  F << F2(0, 0), F2(0, 1), F2(0, 2), F2(0, 3);
  for (int a = 0; a < 2; ++a)
    dF[a] << G(0, 4 * a), G(0, 4 * a + 1), G(0, 4 * a + 2), G(0, 4 * a + 3);
}

}  // namespace hf
