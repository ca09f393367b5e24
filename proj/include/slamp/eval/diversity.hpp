#pragma once

#include <vector>

#include "slamp/data/video.hpp"

namespace slamp {

struct DiversityResult {
  Video mean;               // per-pixel average over samples
  Tensor<float> variance;   // population variance, same shape as mean.frames
};

/// Averages generated samples pixel-wise; blurry regions mark where the
/// samples disagree.
inline DiversityResult diversity_average(const std::vector<Video>& samples) {
  if (samples.empty()) throw PreconditionError("diversity_average: no samples");
  const Shape& shape = samples.front().frames.shape();
  for (const auto& s : samples)
    if (s.frames.shape() != shape)
      detail::shape_fail("diversity_average: " + shape_str(s.frames.shape()) + " vs " + shape_str(shape));
  const std::size_t n = samples.front().frames.size();
  const double count = static_cast<double>(samples.size());
  DiversityResult r;
  r.mean.frames = Tensor<float>(shape);
  r.mean.seed = samples.front().seed;
  r.mean.config_hash = samples.front().config_hash;
  r.variance = Tensor<float>(shape);
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0;
    for (const auto& s : samples) sum += s.frames[k];
    const double mean = sum / count;
    double ss = 0;
    for (const auto& s : samples) ss += (s.frames[k] - mean) * (s.frames[k] - mean);
    r.mean.frames[k] = static_cast<float>(mean);
    r.variance[k] = static_cast<float>(ss / count);
  }
  return r;
}

}  // namespace slamp
