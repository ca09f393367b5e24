#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "slamp/data/idx.hpp"

// Procedural handwritten-style digits, used when no MNIST file is supplied.
// Each digit class is a set of polylines in the unit square (row, col);
// every sample applies a random affine jitter and stroke width before
// anti-aliased rasterisation into a 28x28 cell, MNIST style.

namespace slamp {

namespace detail {

using Point = std::pair<double, double>;
using Stroke = std::vector<Point>;

inline Stroke ellipse_stroke(double cr, double cc, double rr, double rc, int n = 20) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    s.emplace_back(cr + rr * std::sin(a), cc + rc * std::cos(a));
  }
  return s;
}

inline const std::array<std::vector<Stroke>, 10>& digit_strokes() {
  static const std::array<std::vector<Stroke>, 10> strokes = {{
      {ellipse_stroke(0.5, 0.5, 0.4, 0.27)},
      {{{0.1, 0.55}, {0.9, 0.5}}, {{0.28, 0.38}, {0.1, 0.55}}},
      {{{0.25, 0.25}, {0.12, 0.45}, {0.15, 0.65}, {0.3, 0.75}, {0.45, 0.65}, {0.9, 0.25}, {0.9, 0.78}}},
      {{{0.15, 0.28}, {0.1, 0.55}, {0.22, 0.72}, {0.4, 0.65}, {0.48, 0.45}},
       {{0.48, 0.45}, {0.58, 0.7}, {0.75, 0.75}, {0.9, 0.55}, {0.85, 0.28}}},
      {{{0.1, 0.62}, {0.9, 0.62}}, {{0.1, 0.62}, {0.6, 0.2}, {0.6, 0.8}}},
      {{{0.12, 0.75}, {0.12, 0.3}, {0.45, 0.28}, {0.4, 0.55}, {0.55, 0.72}, {0.75, 0.72}, {0.9, 0.5}, {0.85, 0.28}}},
      {{{0.1, 0.65}, {0.3, 0.4}, {0.55, 0.28}, {0.8, 0.32}, {0.9, 0.5}, {0.8, 0.7}, {0.6, 0.72}, {0.5, 0.55},
        {0.55, 0.3}}},
      {{{0.12, 0.25}, {0.12, 0.78}, {0.9, 0.4}}},
      {ellipse_stroke(0.3, 0.5, 0.2, 0.2), ellipse_stroke(0.7, 0.5, 0.22, 0.25)},
      {ellipse_stroke(0.3, 0.5, 0.2, 0.22), {{0.3, 0.72}, {0.9, 0.62}}},
  }};
  return strokes;
}

inline double segment_distance(double pr, double pc, Point a, Point b) {
  const double dr = b.first - a.first, dc = b.second - a.second;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0 ? ((pr - a.first) * dr + (pc - a.second) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double er = a.first + t * dr - pr, ec = a.second + t * dc - pc;
  return std::sqrt(er * er + ec * ec);
}

}  // namespace detail

/// `count` jittered digits (classes cycle 0..9) rendered at 28x28.
inline ImageSet procedural_digits(int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("procedural_digits: count must be positive");
  constexpr int kSize = 28;
  constexpr double kBox = 20.0, kOffset = 4.0;  // digit body occupies the central 20x20, as in MNIST
  ImageSet s{count, kSize, kSize, std::vector<float>(static_cast<std::size_t>(count) * kSize * kSize, 0.0f)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const auto& strokes = detail::digit_strokes()[static_cast<std::size_t>(i % 10)];
    const double rot = 0.2 * u(rng), shear = 0.2 * u(rng);
    const double sr = 0.95 + 0.08 * u(rng), sc = 0.9 + 0.12 * u(rng);
    const double radius = 1.5 + 0.4 * u(rng);
    const double tr = 0.6 * u(rng), tc = 0.6 * u(rng);
    const double cs = std::cos(rot), sn = std::sin(rot);
    // Unit-square point to pixel coordinates about the cell centre.
    auto place = [&](detail::Point p) -> detail::Point {
      const double r = (p.first - 0.5) * sr, c = (p.second - 0.5) * sc + shear * (p.first - 0.5);
      return {kOffset + kBox * (0.5 + cs * r - sn * c) + tr, kOffset + kBox * (0.5 + sn * r + cs * c) + tc};
    };
    std::vector<detail::Stroke> placed;
    for (const auto& st : strokes) {
      detail::Stroke p;
      for (const auto& pt : st) p.push_back(place({pt.first + 0.015 * u(rng), pt.second + 0.015 * u(rng)}));
      placed.push_back(std::move(p));
    }
    float* img = s.image(i);
    for (int r = 0; r < kSize; ++r)
      for (int c = 0; c < kSize; ++c) {
        double d = 1e9;
        for (const auto& st : placed)
          for (std::size_t k = 0; k + 1 < st.size(); ++k)
            d = std::min(d, detail::segment_distance(r + 0.5, c + 0.5, st[k], st[k + 1]));
        img[r * kSize + c] = static_cast<float>(std::clamp(radius + 0.5 - d, 0.0, 1.0));
      }
  }
  return s;
}

/// Resamples one image to `size` x `size`: box averaging when shrinking,
/// bilinear when enlarging.
inline std::vector<float> resize_image(const float* src, int h, int w, int size) {
  if (size < 1) throw ConfigError("resize_image: size must be positive");
  std::vector<float> out(static_cast<std::size_t>(size) * size, 0.0f);
  if (size == h && size == w) return std::vector<float>(src, src + static_cast<std::size_t>(h) * w);
  const double fy = static_cast<double>(h) / size, fx = static_cast<double>(w) / size;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      double v = 0;
      if (fy > 1.0 || fx > 1.0) {
        const double y0 = r * fy, y1 = (r + 1) * fy, x0 = c * fx, x1 = (c + 1) * fx;
        double area = 0;
        for (int y = static_cast<int>(y0); y < std::min<int>(h, static_cast<int>(std::ceil(y1))); ++y)
          for (int x = static_cast<int>(x0); x < std::min<int>(w, static_cast<int>(std::ceil(x1))); ++x) {
            const double a = (std::min<double>(y + 1, y1) - std::max<double>(y, y0)) *
                             (std::min<double>(x + 1, x1) - std::max<double>(x, x0));
            v += a * src[y * w + x];
            area += a;
          }
        v /= area;
      } else {
        const double y = std::clamp((r + 0.5) * fy - 0.5, 0.0, h - 1.0), x = std::clamp((c + 0.5) * fx - 0.5, 0.0, w - 1.0);
        const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
        const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
        const double wy = y - y0, wx = x - x0;
        v = (1 - wy) * ((1 - wx) * src[y0 * w + x0] + wx * src[y0 * w + x1]) +
            wy * ((1 - wx) * src[y1 * w + x0] + wx * src[y1 * w + x1]);
      }
      out[static_cast<std::size_t>(r) * size + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return out;
}

}  // namespace slamp
