#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "slamp/autograd.hpp"

namespace slamp::testing {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.values()) v = d(rng);
  return t;
}

struct GradCheck {
  double analytic = 0, numeric = 0;
  double rel_error() const {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
  }
  /// Relative agreement, with an absolute floor for near-zero gradients where
  /// finite differences are dominated by rounding.
  bool ok(double rel_tol, double abs_floor) const {
    return std::abs(analytic - numeric) <= std::max(rel_tol * std::max(std::abs(analytic), std::abs(numeric)), abs_floor);
  }
};

/// Central differences of a scalar function w.r.t. selected entries of
/// `input`, compared with the reverse-mode gradient. `f` must rebuild the
/// graph from `input` on every call.
inline std::vector<GradCheck> check_gradient(const std::function<Var<double>()>& f, Var<double>& input,
                                             const std::vector<std::size_t>& entries, double h = 1e-6) {
  input.zero_grad();
  backward(f());
  const Tensor<double> grad = input.grad();
  std::vector<GradCheck> out;
  for (std::size_t i : entries) {
    double& x = input.mutable_value()[i];
    const double saved = x;
    x = saved + h;
    const double up = f().item();
    x = saved - h;
    const double down = f().item();
    x = saved;
    out.push_back({grad.empty() ? 0.0 : grad[i], (up - down) / (2 * h)});
  }
  return out;
}

/// Copy of a variable's values; safe to iterate over when `v` is a temporary.
template <class T>
std::vector<T> values_of(const Var<T>& v) {
  return v.value().to_vector();
}

inline std::vector<std::size_t> random_entries(std::size_t size, std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, size - 1);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(d(rng));
  return out;
}

}  // namespace slamp::testing
