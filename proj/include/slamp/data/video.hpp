#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slamp/tensor.hpp"

namespace slamp {

/// One clip: frames [T, C, H, W] with intensities in [0, 1].
struct Video {
  Tensor<float> frames;
  std::uint64_t seed = 0;
  std::string config_hash;

  int length() const { return frames.dim(0); }
  int channels() const { return frames.dim(1); }
  int height() const { return frames.dim(2); }
  int width() const { return frames.dim(3); }
  std::size_t frame_size() const { return frames.size() / static_cast<std::size_t>(length()); }
  const float* frame_data(int t) const { return frames.data() + static_cast<std::size_t>(t) * frame_size(); }
};

/// Batch laid out per time step: frames[t] is [B, C, H, W].
template <class T>
struct VideoBatch {
  std::vector<Tensor<T>> frames;

  int length() const { return static_cast<int>(frames.size()); }
  int batch() const { return frames.empty() ? 0 : frames[0].dim(0); }
};

/// Stacks clips into a batch, keeping the first `length` frames (all when 0).
template <class T>
VideoBatch<T> make_batch(const std::vector<const Video*>& clips, int length = 0) {
  if (clips.empty()) throw PreconditionError("make_batch: no clips");
  const Video& first = *clips[0];
  const int len = length > 0 ? length : first.length();
  const int b = static_cast<int>(clips.size());
  VideoBatch<T> out;
  for (int t = 0; t < len; ++t) out.frames.emplace_back(Shape{b, first.channels(), first.height(), first.width()});
  const std::size_t fs = first.frame_size();
  for (int i = 0; i < b; ++i) {
    const Video& v = *clips[static_cast<std::size_t>(i)];
    if (v.frames.shape()[1] != first.channels() || v.height() != first.height() || v.width() != first.width())
      detail::shape_fail("make_batch: clips differ in frame shape");
    if (v.length() < len) throw PreconditionError("make_batch: clip shorter than requested length");
    for (int t = 0; t < len; ++t) {
      const float* src = v.frame_data(t);
      T* dst = out.frames[static_cast<std::size_t>(t)].data() + static_cast<std::size_t>(i) * fs;
      for (std::size_t k = 0; k < fs; ++k) dst[k] = static_cast<T>(src[k]);
    }
  }
  return out;
}

}  // namespace slamp
