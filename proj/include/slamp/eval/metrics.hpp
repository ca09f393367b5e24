#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "slamp/tensor.hpp"

namespace slamp {

inline constexpr double kPsnrCap = 100.0;

/// Peak signal-to-noise ratio in dB; identical inputs give `cap`.
template <class T>
double psnr(std::span<const T> a, std::span<const T> b, double max_val = 1.0, double cap = kPsnrCap) {
  if (a.size() != b.size() || a.empty()) detail::shape_fail("psnr: size mismatch");
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(max_val * max_val / mse));
}

template <class T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double max_val = 1.0, double cap = kPsnrCap) {
  if (a.shape() != b.shape()) detail::shape_fail("psnr: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return psnr<T>(a.values(), b.values(), max_val, cap);
}

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  double total = 0;
  for (int i = 0; i < size; ++i) {
    const double x = i - (size - 1) / 2.0;
    w[static_cast<std::size_t>(i)] = std::exp(-x * x / (2 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= total;
  return w;
}

/// Separable 'valid' filtering of an h x w plane.
inline std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(r) * w + c + i];
      tmp[static_cast<std::size_t>(r) * ow + c] = s;
    }
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = s;
    }
  return out;
}

}  // namespace detail

/// Mean structural similarity of two [C, H, W] (or [H, W]) images with a
/// Gaussian window, 'valid' borders, channels averaged.
template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimParams& p = {}) {
  if (a.shape() != b.shape()) detail::shape_fail("ssim: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  if (a.rank() != 2 && a.rank() != 3) detail::shape_fail("ssim: expects [H,W] or [C,H,W], got " + shape_str(a.shape()));
  const int c = a.rank() == 3 ? a.dim(0) : 1;
  const int h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
  if (h < p.window || w < p.window)
    throw PreconditionError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than window " +
                            std::to_string(p.window));
  const auto k = detail::gaussian_window(p.window, p.sigma);
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  double total = 0;
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> x(hw), y(hw), xx(hw), yy(hw), xy(hw);
    for (std::size_t i = 0; i < hw; ++i) {
      x[i] = static_cast<double>(a[ch * hw + i]);
      y[i] = static_cast<double>(b[ch * hw + i]);
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = detail::filter_valid(x, h, w, k), my = detail::filter_valid(y, h, w, k);
    const auto sxx = detail::filter_valid(xx, h, w, k), syy = detail::filter_valid(yy, h, w, k),
               sxy = detail::filter_valid(xy, h, w, k);
    double acc = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      acc += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / c;
}

/// Mean and normal-approximation 95% half-width (1.96 s / sqrt(n)).
struct MeanCi {
  double mean = 0, half_width = 0;
};

inline MeanCi mean_ci(std::span<const double> xs) {
  MeanCi r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.half_width = 1.96 * std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return r;
}

}  // namespace slamp
