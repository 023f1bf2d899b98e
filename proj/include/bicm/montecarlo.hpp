#pragma once

#include <cstdint>

#include "bicm/constellation.hpp"
#include "bicm/infotheory.hpp"

namespace bicm {

/// Sample mean with its standard error (sample sd / sqrt(samples)).
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

// Simulations of y = sqrt(snr) x + z with x uniform over the set and
// z ~ CN(0,1) drawn as two independent N(0, 1/2) components. Samples are
// split into fixed-size batches, each with its own generator seeded from
// (seed, batch index), and merged in batch order, so the estimate depends
// only on (inputs, samples, seed).

/// Squared error of the conditional-mean estimator, averaged over draws.
McEstimate mc_mmse(const PointVector& a, Snr snr, std::int64_t samples, std::uint64_t seed);

/// Per-draw log p(y|x)/p(y), averaged.
McEstimate mc_mi_cm(const PointVector& a, Snr snr, std::int64_t samples, std::uint64_t seed);

/// Per-draw sum over bit positions of the bit-channel log-ratios, averaged.
McEstimate mc_mi_bicm(const Constellation& c, Snr snr, std::int64_t samples,
                      std::uint64_t seed);

/// Batch size used to split sample streams.
inline constexpr std::int64_t kMcBatchSize = 1 << 14;

}  // namespace bicm
