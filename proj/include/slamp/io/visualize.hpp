#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "slamp/data/video.hpp"
#include "slamp/eval/flow_color.hpp"
#include "slamp/io/grid.hpp"
#include "slamp/rollout/rollout.hpp"

namespace slamp {

inline constexpr const char* kSampleGridRows[] = {"ground_truth", "combined", "appearance", "motion", "mask", "flow"};

/// Row `row` of a [B, ...] tensor, dropping the batch axis.
template <class T>
Tensor<T> take_row(const Tensor<T>& batch, int row) {
  Shape s(batch.shape().begin() + 1, batch.shape().end());
  Tensor<T> out(s);
  std::copy_n(batch.data() + static_cast<std::size_t>(row) * out.size(), out.size(), out.data());
  return out;
}

/// Largest flow magnitude of one batch row over a rollout; 0 when flow-free.
template <class T>
double max_flow_magnitude(const RolloutOutput<T>& r, int row) {
  double m = 0;
  for (const auto& s : r.steps) {
    if (!s.flow.defined()) continue;
    const auto f = take_row(s.flow.value(), row);
    const std::size_t hw = f.size() / 2;
    for (std::size_t i = 0; i < hw; ++i) m = std::max(m, std::hypot(static_cast<double>(f[i]), static_cast<double>(f[hw + i])));
  }
  return m;
}

/// Grid with one column per frame and rows: ground truth, combined
/// prediction, appearance prediction, motion prediction, mask (white =
/// appearance weight 1), flow colour. Cells a variant does not produce, and
/// frame 0 (never predicted), are left blank. Flow colours share one scale
/// across the sequence; `flow_max` <= 0 picks the largest magnitude.
template <class T>
Image8 sample_grid(const Video& truth, const RolloutOutput<T>& r, int row, double flow_max = 0.0) {
  const int cols = static_cast<int>(r.steps.size()) + 1;
  if (truth.length() < cols) throw PreconditionError("sample_grid: ground truth shorter than rollout");
  using Row = std::vector<std::optional<RgbImage>>;
  std::vector<Row> rows(6, Row(static_cast<std::size_t>(cols)));
  for (int t = 0; t < cols; ++t) {
    Tensor<float> f(Shape{truth.channels(), truth.height(), truth.width()});
    std::copy_n(truth.frame_data(t), f.size(), f.data());
    rows[0][static_cast<std::size_t>(t)] = to_rgb(f);
  }
  if (flow_max <= 0) flow_max = max_flow_magnitude(r, row);
  if (flow_max <= 0) flow_max = 1.0;
  for (const auto& s : r.steps) {
    const auto c = static_cast<std::size_t>(s.target_index);
    rows[1][c] = to_rgb(take_row(s.combined.value(), row));
    rows[2][c] = to_rgb(take_row(s.appearance.value(), row));
    if (s.motion.defined()) rows[3][c] = to_rgb(take_row(s.motion.value(), row));
    if (s.mask.defined()) rows[4][c] = to_rgb(take_row(s.mask.value(), row));
    if (s.flow.defined()) rows[5][c] = flow_to_color(take_row(s.flow.value(), row), flow_max);
  }
  return image_grid(rows);
}

/// Colour-wheel legend: each pixel coloured by its displacement from the centre.
inline Image8 flow_wheel_legend(int size = 65) {
  Tensor<double> f(Shape{2, size, size});
  const double c = (size - 1) / 2.0;
  const std::size_t hw = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      f[static_cast<std::size_t>(y) * size + x] = y - c;
      f[hw + static_cast<std::size_t>(y) * size + x] = x - c;
    }
  return image_grid({{flow_to_color(f, c)}}, 0);
}

/// Predicted frames of each batch row as clips: ground-truth conditioning
/// frames followed by the generated future.
template <class T>
std::vector<Video> generated_clips(const Video& truth, const Generation<T>& g, int cond_frames) {
  const int b = g.predicted.empty() ? 0 : g.predicted.front().dim(0);
  const int len = cond_frames + static_cast<int>(g.predicted.size());
  std::vector<Video> out;
  for (int r = 0; r < b; ++r) {
    Video v;
    v.seed = truth.seed;
    v.config_hash = truth.config_hash;
    v.frames = Tensor<float>(Shape{len, truth.channels(), truth.height(), truth.width()});
    const std::size_t fs = truth.frame_size();
    for (int t = 0; t < cond_frames; ++t) std::copy_n(truth.frame_data(t), fs, v.frames.data() + t * fs);
    for (std::size_t k = 0; k < g.predicted.size(); ++k) {
      const auto f = take_row(g.predicted[k], r);
      for (std::size_t i = 0; i < fs; ++i) v.frames[(cond_frames + k) * fs + i] = static_cast<float>(f[i]);
    }
    out.push_back(std::move(v));
  }
  return out;
}

/// Rows of whole clips (e.g. truth, diversity mean, variance) as a grid.
inline Image8 clip_rows(const std::vector<const Tensor<float>*>& clips) {
  std::vector<std::vector<std::optional<RgbImage>>> rows;
  for (const auto* c : clips) {
    std::vector<std::optional<RgbImage>> row;
    for (int t = 0; t < c->dim(0); ++t) {
      Tensor<float> f(Shape{c->dim(1), c->dim(2), c->dim(3)});
      std::copy_n(c->data() + static_cast<std::size_t>(t) * f.size(), f.size(), f.data());
      row.push_back(to_rgb(f));
    }
    rows.push_back(std::move(row));
  }
  return image_grid(rows);
}

}  // namespace slamp
