#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "slamp/autograd.hpp"

namespace slamp {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

namespace detail {

template <class T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape())
    shape_fail(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

/// Elementwise unary op with derivative expressed through input x and output y.
template <class T, class F, class D>
Var<T> unary(const Var<T>& x, F f, D dfdx) {
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return Var<T>::make(std::move(out), {x}, [dfdx](Node<T>& n) {
    const T* xin = n.parent_value(0).data();
    const T* y = n.value.data();
    const T* g = n.grad.data();
    T* gx = n.parent_grad(0)->data();
    for (std::size_t i = 0; i < n.value.size(); ++i) gx[i] += g[i] * dfdx(xin[i], y[i]);
  });
}

}  // namespace detail

template <class T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  out += b.value();
  return Var<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t k = 0; k < 2; ++k)
      if (auto* g = n.parent_grad(k)) *g += n.grad;
  });
}

template <class T>
Var<T> operator-(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "sub");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return Var<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    if (auto* g = n.parent_grad(0)) *g += n.grad;
    if (auto* g = n.parent_grad(1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= n.grad[i];
  });
}

template <class T>
Var<T> operator*(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return Var<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    const auto& av = n.parent_value(0);
    const auto& bv = n.parent_value(1);
    if (auto* g = n.parent_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * bv[i];
    if (auto* g = n.parent_grad(1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * av[i];
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T s) {
  return detail::unary(x, [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <class T>
Var<T> add_scalar(const Var<T>& x, T s) {
  return detail::unary(x, [s](T v) { return v + s; }, [](T, T) { return T{1}; });
}

template <class T>
Var<T> square(const Var<T>& x) {
  return detail::unary(x, [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

template <class T>
Var<T> exp(const Var<T>& x) {
  return detail::unary(x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return T{1} / (T{1} + std::exp(-v)); }, [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return detail::unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2)) {
  return detail::unary(
      x, [slope](T v) { return v > T{0} ? v : slope * v; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

/// Clamps into [lo, hi]; the gradient is zero where the clamp is active.
template <class T>
Var<T> clamp(const Var<T>& x, T lo, T hi) {
  return detail::unary(
      x, [lo, hi](T v) { return std::clamp(v, lo, hi); },
      [lo, hi](T v, T) { return (v >= lo && v <= hi) ? T{1} : T{0}; });
}

/// Full reduction to a one-element tensor.
template <class T>
Var<T> sum(const Var<T>& x) {
  T s{0};
  for (T v : x.value().values()) s += v;
  return Var<T>::make(Tensor<T>::scalar(s), {x}, [](Node<T>& n) {
    const T g = n.grad[0];
    for (T& v : n.parent_grad(0)->values()) v += g;
  });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.size()));
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  return Var<T>::make(x.value().reshaped(std::move(shape)), {x}, [](Node<T>& n) {
    auto& g = *n.parent_grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

/// [B, ...] -> [B, prod(...)]
template <class T>
Var<T> flatten(const Var<T>& x) {
  const int b = x.dim(0);
  return reshape(x, Shape{b, static_cast<int>(x.size() / static_cast<std::size_t>(b))});
}

namespace detail {

inline void split_at(const Shape& s, int dim, std::size_t& outer, std::size_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < dim; ++i) outer *= static_cast<std::size_t>(s[i]);
  for (std::size_t i = static_cast<std::size_t>(dim) + 1; i < s.size(); ++i) inner *= static_cast<std::size_t>(s[i]);
}

}  // namespace detail

/// Concatenates along `dim`; all other dimensions must agree.
template <class T>
Var<T> concat(const std::vector<Var<T>>& xs, int dim = 1) {
  if (xs.empty()) detail::shape_fail("concat of nothing");
  Shape out_shape = xs[0].shape();
  if (dim < 0 || dim >= static_cast<int>(out_shape.size())) detail::shape_fail("concat: bad dim");
  int total = 0;
  for (const auto& x : xs) {
    Shape s = x.shape();
    if (s.size() != out_shape.size()) detail::shape_fail("concat: rank mismatch");
    total += s[dim];
    s[dim] = out_shape[dim];
    if (s != out_shape) detail::shape_fail("concat: incompatible " + shape_str(x.shape()) + " vs " + shape_str(xs[0].shape()));
  }
  out_shape[dim] = total;
  std::size_t outer, inner;
  detail::split_at(out_shape, dim, outer, inner);
  Tensor<T> out(out_shape);
  const std::size_t out_row = static_cast<std::size_t>(total) * inner;
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& x : xs) {
    const std::size_t w = static_cast<std::size_t>(x.dim(dim)) * inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.value().data() + o * w, w, out.data() + o * out_row + offset);
    offset += w;
  }
  return Var<T>::make(std::move(out), xs, [widths, outer, out_row](Node<T>& n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (auto* g = n.parent_grad(k))
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < widths[k]; ++i) g->data()[o * widths[k] + i] += n.grad.data()[o * out_row + off + i];
      off += widths[k];
    }
  });
}

/// x[..., start:start+length, ...] along `dim`.
template <class T>
Var<T> slice(const Var<T>& x, int dim, int start, int length) {
  Shape s = x.shape();
  if (dim < 0 || dim >= static_cast<int>(s.size()) || start < 0 || length < 0 || start + length > s[dim])
    detail::shape_fail("slice out of range on " + shape_str(s));
  std::size_t outer, inner;
  detail::split_at(s, dim, outer, inner);
  const std::size_t in_row = static_cast<std::size_t>(s[dim]) * inner;
  const std::size_t w = static_cast<std::size_t>(length) * inner;
  const std::size_t off = static_cast<std::size_t>(start) * inner;
  s[dim] = length;
  Tensor<T> out(s);
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(x.value().data() + o * in_row + off, w, out.data() + o * w);
  return Var<T>::make(std::move(out), {x}, [outer, in_row, w, off](Node<T>& n) {
    T* g = n.parent_grad(0)->data();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < w; ++i) g[o * in_row + off + i] += n.grad.data()[o * w + i];
  });
}

/// y = x W^T + b with x [B, in], W [out, in], b [out].
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  if (x.shape().size() != 2 || weight.shape().size() != 2 || x.dim(1) != weight.dim(1) ||
      bias.size() != static_cast<std::size_t>(weight.dim(0)))
    detail::shape_fail("linear: x " + shape_str(x.shape()) + ", W " + shape_str(weight.shape()));
  const int b = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  Tensor<T> out(Shape{b, out_dim});
  ConstMatMap<T> xm(x.value().data(), b, in);
  ConstMatMap<T> wm(weight.value().data(), out_dim, in);
  MatMap<T> ym(out.data(), b, out_dim);
  ym.noalias() = xm * wm.transpose();
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(bias.value().data(), out_dim);
  ym.rowwise() += bv;
  return Var<T>::make(std::move(out), {x, weight, bias}, [b, in, out_dim](Node<T>& n) {
    ConstMatMap<T> g(n.grad.data(), b, out_dim);
    if (auto* gx = n.parent_grad(0))
      MatMap<T>(gx->data(), b, in).noalias() += g * ConstMatMap<T>(n.parent_value(1).data(), out_dim, in);
    if (auto* gw = n.parent_grad(1))
      MatMap<T>(gw->data(), out_dim, in).noalias() += g.transpose() * ConstMatMap<T>(n.parent_value(0).data(), b, in);
    if (auto* gb = n.parent_grad(2))
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb->data(), out_dim) += g.colwise().sum();
  });
}

/// Mean over H, W of an NCHW tensor -> [B, C].
template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  if (x.shape().size() != 4) detail::shape_fail("global_avg_pool expects NCHW");
  const int b = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor<T> out(Shape{b, c});
  for (std::size_t i = 0; i < out.size(); ++i) {
    T s{0};
    const T* p = x.value().data() + i * hw;
    for (std::size_t k = 0; k < hw; ++k) s += p[k];
    out[i] = s / static_cast<T>(hw);
  }
  return Var<T>::make(std::move(out), {x}, [hw](Node<T>& n) {
    T* g = n.parent_grad(0)->data();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const T gi = n.grad[i] / static_cast<T>(hw);
      for (std::size_t k = 0; k < hw; ++k) g[i * hw + k] += gi;
    }
  });
}

/// x [B, C, H, W] scaled per channel by s [B, C].
template <class T>
Var<T> scale_channels(const Var<T>& x, const Var<T>& s) {
  if (x.shape().size() != 4 || s.shape() != Shape{x.dim(0), x.dim(1)})
    detail::shape_fail("scale_channels: x " + shape_str(x.shape()) + ", s " + shape_str(s.shape()));
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t k = 0; k < hw; ++k) out[i * hw + k] = x.value()[i * hw + k] * s.value()[i];
  return Var<T>::make(std::move(out), {x, s}, [hw](Node<T>& n) {
    const auto& xv = n.parent_value(0);
    const auto& sv = n.parent_value(1);
    auto* gx = n.parent_grad(0);
    auto* gs = n.parent_grad(1);
    for (std::size_t i = 0; i < sv.size(); ++i)
      for (std::size_t k = 0; k < hw; ++k) {
        const T g = n.grad[i * hw + k];
        if (gx) (*gx)[i * hw + k] += g * sv[i];
        if (gs) (*gs)[i] += g * xv[i * hw + k];
      }
  });
}

}  // namespace slamp
