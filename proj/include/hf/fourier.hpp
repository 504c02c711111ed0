// Random Fourier feature embedding for spatial coordinates:
//   phi(X) = [sin(2 pi B X); cos(2 pi B X)],  B ~ Normal(0, sigma^2),
// with B drawn once at construction and frozen.  Exact spatial tangents of
// the features are available for the derivative lanes of the networks.
#pragma once

#include "hf/rng.hpp"
#include "hf/types.hpp"

namespace hf {

class FourierFeatureMap {
 public:
  FourierFeatureMap() = default;
  FourierFeatureMap(int n_frequencies, Real sigma, Rng& rng)
      : B_(normal_matrix(rng, n_frequencies, 2, sigma)) {}
  explicit FourierFeatureMap(MatX B) : B_(std::move(B)) {
    if (B_.cols() != 2) throw DimensionError("FourierFeatureMap: B must have 2 columns");
  }

  int n_frequencies() const { return static_cast<int>(B_.rows()); }
  int feature_width() const { return 2 * n_frequencies(); }
  const MatX& frequency_matrix() const { return B_; }

  // Features for a batch of coordinates (one row of `coords` per point);
  // output has one column per point, feature_width() rows.
  MatX features(const MatX& coords) const {
    check(coords);
    const MatX phase = 2.0 * EIGEN_PI * (B_ * coords.transpose());
    MatX f(feature_width(), coords.rows());
    f.topRows(n_frequencies()) = phase.array().sin().matrix();
    f.bottomRows(n_frequencies()) = phase.array().cos().matrix();
    return f;
  }

  // d(features)/dX_axis for axis in {0, 1}, same layout as features().
  MatX feature_tangent(const MatX& coords, int axis) const {
    check(coords);
    const MatX phase = 2.0 * EIGEN_PI * (B_ * coords.transpose());
    const ArrX k = 2.0 * EIGEN_PI * B_.col(axis).array();
    const ArrX nk = -k;
    MatX d(feature_width(), coords.rows());
    d.topRows(n_frequencies()) = (phase.array().cos().colwise() * k).matrix();
    d.bottomRows(n_frequencies()) = (phase.array().sin().colwise() * nk).matrix();
    return d;
  }

 private:
  void check(const MatX& coords) const {
    if (coords.cols() != 2)
      throw DimensionError("FourierFeatureMap: coordinates must have 2 columns");
  }
  MatX B_;
};

}  // namespace hf
