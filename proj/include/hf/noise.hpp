// Measurement-noise injection for synthetic datasets and the signal-to-noise
// metric used to characterize them.
#pragma once

#include <cstdint>

#include "hf/types.hpp"

namespace hf {

// Adds i.i.d. Gaussian noise (std sigma) to every component of every node at
// every step.  sigma = 0 returns the input unchanged; equal seeds give
// bitwise-equal output.
FieldSnapshotSeries add_noise(const FieldSnapshotSeries& s, Real sigma,
                              std::uint64_t seed);

struct SnrResult {
  Real decibels = 0.0;
  bool noise_free = false;  // identical fields: decibels holds +infinity
};

// 10 log10( sum_i ||reference row|| ^2 / sum_i ||measured - reference||^2 )
// over the nodes of step j.
SnrResult snr(const FieldSnapshotSeries& measured,
              const FieldSnapshotSeries& reference, int step);

}  // namespace hf
