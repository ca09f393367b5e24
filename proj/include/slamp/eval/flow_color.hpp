#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "slamp/tensor.hpp"

// Optical-flow false colouring on the Middlebury colour wheel: hue from
// direction, saturation from magnitude, white for zero flow.

namespace slamp {

namespace detail {

inline const std::vector<std::array<double, 3>>& color_wheel() {
  static const std::vector<std::array<double, 3>> wheel = [] {
    std::vector<std::array<double, 3>> w;
    const int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
    for (int i = 0; i < ry; ++i) w.push_back({1.0, static_cast<double>(i) / ry, 0.0});
    for (int i = 0; i < yg; ++i) w.push_back({1.0 - static_cast<double>(i) / yg, 1.0, 0.0});
    for (int i = 0; i < gc; ++i) w.push_back({0.0, 1.0, static_cast<double>(i) / gc});
    for (int i = 0; i < cb; ++i) w.push_back({0.0, 1.0 - static_cast<double>(i) / cb, 1.0});
    for (int i = 0; i < bm; ++i) w.push_back({static_cast<double>(i) / bm, 0.0, 1.0});
    for (int i = 0; i < mr; ++i) w.push_back({1.0, 0.0, 1.0 - static_cast<double>(i) / mr});
    return w;
  }();
  return wheel;
}

}  // namespace detail

/// Position of a flow direction on the wheel, in [0, 1).
inline double flow_wheel_position(double d_row, double d_col) {
  const double a = std::atan2(-d_row, -d_col) / std::numbers::pi;  // (-1, 1]
  double pos = (a + 1.0) / 2.0;
  if (pos >= 1.0) pos -= 1.0;
  return pos;
}

/// RGB in [0, 1] for one displacement; `rad` is magnitude / max, clipped to 1.
inline std::array<double, 3> flow_color(double d_row, double d_col, double max_magnitude) {
  const auto& wheel = detail::color_wheel();
  const int n = static_cast<int>(wheel.size());
  const double mag = std::hypot(d_row, d_col);
  const double rad = max_magnitude > 0 ? std::min(mag / max_magnitude, 1.0) : 0.0;
  const double fk = flow_wheel_position(d_row, d_col) * n;
  const int k0 = static_cast<int>(std::floor(fk)) % n;
  const int k1 = (k0 + 1) % n;
  const double f = fk - std::floor(fk);
  std::array<double, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) {
    const double col = (1 - f) * wheel[static_cast<std::size_t>(k0)][static_cast<std::size_t>(ch)] +
                       f * wheel[static_cast<std::size_t>(k1)][static_cast<std::size_t>(ch)];
    rgb[static_cast<std::size_t>(ch)] = 1.0 - rad * (1.0 - col);
  }
  return rgb;
}

/// Colours a [2, H, W] flow (channel 0 rows, channel 1 cols) into [H, W, 3].
/// `max_magnitude` <= 0 selects the largest magnitude in the field.
template <class T>
Tensor<double> flow_to_color(const Tensor<T>& flow, double max_magnitude = 0.0) {
  if (flow.rank() != 3 || flow.dim(0) != 2) detail::shape_fail("flow_to_color expects [2,H,W], got " + shape_str(flow.shape()));
  const int h = flow.dim(1), w = flow.dim(2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (T v : flow.values())
    if (!std::isfinite(static_cast<double>(v))) throw PreconditionError("flow_to_color: non-finite flow");
  if (max_magnitude <= 0) {
    for (std::size_t i = 0; i < hw; ++i)
      max_magnitude = std::max(max_magnitude, std::hypot(static_cast<double>(flow[i]), static_cast<double>(flow[hw + i])));
    if (max_magnitude == 0) max_magnitude = 1.0;
  }
  Tensor<double> out(Shape{h, w, 3});
  for (std::size_t i = 0; i < hw; ++i) {
    const auto rgb = flow_color(static_cast<double>(flow[i]), static_cast<double>(flow[hw + i]), max_magnitude);
    for (int ch = 0; ch < 3; ++ch) out[i * 3 + static_cast<std::size_t>(ch)] = rgb[static_cast<std::size_t>(ch)];
  }
  return out;
}

}  // namespace slamp
