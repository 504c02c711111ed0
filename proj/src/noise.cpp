#include "hf/noise.hpp"

#include <limits>

#include "hf/rng.hpp"

namespace hf {

FieldSnapshotSeries add_noise(const FieldSnapshotSeries& s, Real sigma,
                              std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigurationError("add_noise: sigma must be >= 0");
  s.validate();
  if (sigma == 0.0) return s;
  FieldSnapshotSeries out = s;
  Rng rng(seed);
  for (MatX& v : out.values)
    v += normal_matrix(rng, static_cast<int>(v.rows()), static_cast<int>(v.cols()),
                       sigma);
  return out;
}

SnrResult snr(const FieldSnapshotSeries& measured,
              const FieldSnapshotSeries& reference, int step) {
  measured.validate();
  reference.validate();
  if (measured.components != reference.components ||
      !(measured.grid == reference.grid) ||
      measured.n_steps() != reference.n_steps())
    throw DimensionError("snr: series shapes do not match");
  if (step < 0 || step >= measured.n_steps())
    throw DimensionError("snr: step index out of range");

  const Real signal = reference.values[step].squaredNorm();
  const Real error = (measured.values[step] - reference.values[step]).squaredNorm();
  SnrResult out;
  if (error == 0.0) {
    out.decibels = std::numeric_limits<Real>::infinity();
    out.noise_free = true;
    return out;
  }
  out.decibels = 10.0 * std::log10(signal / error);
  return out;
}

}  // namespace hf
