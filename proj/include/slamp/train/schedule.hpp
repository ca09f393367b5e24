#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "slamp/errors.hpp"
#include "slamp/rollout/rollout.hpp"

namespace slamp {

/// Probability of feeding the ground-truth frame at training iteration `i`
/// under inverse sigmoid decay: k / (k + exp(i / k)).
inline double scheduled_sampling_prob(std::int64_t iteration, double k) {
  if (!(k > 0.0)) throw PreconditionError("scheduled sampling constant k must be positive");
  const double e = std::exp(static_cast<double>(iteration) / k);
  return std::isinf(e) ? 0.0 : k / (k + e);
}

/// One Bernoulli draw per (time step, sequence): with probability
/// 1 - truth_prob the generated frame replaces ground truth as the input.
/// Only frames after the conditioning window are eligible.
inline FeedMask draw_feed_mask(int total_frames, int cond_frames, int batch, double truth_prob, std::uint64_t seed) {
  FeedMask feed(static_cast<std::size_t>(total_frames), std::vector<std::uint8_t>(static_cast<std::size_t>(batch), 0));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = cond_frames; t < total_frames; ++t)
    for (int b = 0; b < batch; ++b)
      feed[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] = u(rng) >= truth_prob ? 1 : 0;
  return feed;
}

}  // namespace slamp
