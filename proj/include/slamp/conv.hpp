#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "slamp/ops.hpp"

namespace slamp {

namespace detail {

/// Geometry of a strided, zero-padded square-kernel correlation.
struct ConvGeometry {
  int batch, channels, height, width;
  int kernel, stride, pad;
  int out_h, out_w;

  static ConvGeometry make(int b, int c, int h, int w, int k, int s, int p) {
    ConvGeometry g{b, c, h, w, k, s, p, (h + 2 * p - k) / s + 1, (w + 2 * p - k) / s + 1};
    if (k <= 0 || s <= 0 || p < 0 || g.out_h <= 0 || g.out_w <= 0)
      shape_fail("invalid convolution geometry");
    return g;
  }
  std::size_t col_rows() const { return static_cast<std::size_t>(channels) * kernel * kernel; }
  std::size_t col_cols() const { return static_cast<std::size_t>(batch) * out_h * out_w; }
};

/// Output positions [lo, hi) whose input index o*stride - pad + k lies in [0, n).
inline std::pair<int, int> valid_range(int out, int n, int stride, int pad, int k) {
  const int off = k - pad;
  int lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  int hi = off >= n ? 0 : (n - 1 - off) / stride + 1;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

/// Image batch [B,C,H,W] -> columns [C*k*k, B*OH*OW].
template <class T>
void im2col(const T* img, const ConvGeometry& g, T* col) {
  const std::size_t cols = g.col_cols();
  const std::size_t ohw = static_cast<std::size_t>(g.out_h) * g.out_w;
  for (int c = 0; c < g.channels; ++c)
    for (int ki = 0; ki < g.kernel; ++ki) {
      const auto [h_lo, h_hi] = valid_range(g.out_h, g.height, g.stride, g.pad, ki);
      for (int kj = 0; kj < g.kernel; ++kj) {
        const auto [w_lo, w_hi] = valid_range(g.out_w, g.width, g.stride, g.pad, kj);
        T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ki) * g.kernel + kj) * cols;
        for (int b = 0; b < g.batch; ++b) {
          const T* plane = img + (static_cast<std::size_t>(b) * g.channels + c) * g.height * g.width;
          T* dst = row + static_cast<std::size_t>(b) * ohw;
          std::fill(dst, dst + static_cast<std::size_t>(h_lo) * g.out_w, T{0});
          for (int oh = h_lo; oh < h_hi; ++oh) {
            T* d = dst + static_cast<std::size_t>(oh) * g.out_w;
            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(oh * g.stride - g.pad + ki) * g.width - g.pad + kj;
            std::fill(d, d + w_lo, T{0});
            if (g.stride == 1)
              std::copy(plane + base + w_lo, plane + base + w_hi, d + w_lo);
            else
              for (int ow = w_lo; ow < w_hi; ++ow) d[ow] = plane[base + ow * g.stride];
            std::fill(d + w_hi, d + g.out_w, T{0});
          }
          std::fill(dst + static_cast<std::size_t>(h_hi) * g.out_w, dst + ohw, T{0});
        }
      }
    }
}

/// Adjoint of im2col: scatters-adds columns back into an image batch.
template <class T>
void col2im(const T* col, const ConvGeometry& g, T* img) {
  const std::size_t cols = g.col_cols();
  const std::size_t ohw = static_cast<std::size_t>(g.out_h) * g.out_w;
  for (int c = 0; c < g.channels; ++c)
    for (int ki = 0; ki < g.kernel; ++ki) {
      const auto [h_lo, h_hi] = valid_range(g.out_h, g.height, g.stride, g.pad, ki);
      for (int kj = 0; kj < g.kernel; ++kj) {
        const auto [w_lo, w_hi] = valid_range(g.out_w, g.width, g.stride, g.pad, kj);
        const T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ki) * g.kernel + kj) * cols;
        for (int b = 0; b < g.batch; ++b) {
          T* plane = img + (static_cast<std::size_t>(b) * g.channels + c) * g.height * g.width;
          const T* src = row + static_cast<std::size_t>(b) * ohw;
          for (int oh = h_lo; oh < h_hi; ++oh) {
            const T* s = src + static_cast<std::size_t>(oh) * g.out_w;
            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(oh * g.stride - g.pad + ki) * g.width - g.pad + kj;
            for (int ow = w_lo; ow < w_hi; ++ow) plane[base + ow * g.stride] += s[ow];
          }
        }
      }
    }
}

/// [B, C, HW] <-> [C, B*HW] layout swaps.
template <class T>
void batch_to_channel_major(const T* src, int b, int c, std::size_t hw, T* dst) {
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < c; ++j)
      std::copy_n(src + (static_cast<std::size_t>(i) * c + j) * hw, hw, dst + (static_cast<std::size_t>(j) * b + i) * hw);
}

template <class T>
void channel_to_batch_major(const T* src, int b, int c, std::size_t hw, T* dst, bool accumulate) {
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < c; ++j) {
      const T* s = src + (static_cast<std::size_t>(j) * b + i) * hw;
      T* d = dst + (static_cast<std::size_t>(i) * c + j) * hw;
      if (accumulate)
        for (std::size_t k = 0; k < hw; ++k) d[k] += s[k];
      else
        std::copy_n(s, hw, d);
    }
}

}  // namespace detail

/// 2-D cross-correlation. x [B,C,H,W], weight [OC,C,k,k], bias [OC].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  if (x.shape().size() != 4 || weight.shape().size() != 4 || weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3) ||
      bias.size() != static_cast<std::size_t>(weight.dim(0)))
    detail::shape_fail("conv2d: x " + shape_str(x.shape()) + ", W " + shape_str(weight.shape()));
  const auto g = detail::ConvGeometry::make(x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(2), stride, pad);
  const int oc = weight.dim(0);
  const std::size_t ohw = static_cast<std::size_t>(g.out_h) * g.out_w;
  const auto rows = static_cast<Eigen::Index>(g.col_rows());
  const auto cols = static_cast<Eigen::Index>(g.col_cols());

  AlignedVector<T> col(g.col_rows() * g.col_cols());
  detail::im2col(x.value().data(), g, col.data());
  AlignedVector<T> ym(static_cast<std::size_t>(oc) * g.col_cols());
  MatMap<T> y(ym.data(), oc, cols);
  y.noalias() = ConstMatMap<T>(weight.value().data(), oc, rows) * ConstMatMap<T>(col.data(), rows, cols);
  y.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.value().data(), oc);

  Tensor<T> out(Shape{g.batch, oc, g.out_h, g.out_w});
  detail::channel_to_batch_major(ym.data(), g.batch, oc, ohw, out.data(), false);

  return Var<T>::make(std::move(out), {x, weight, bias}, [g, oc, ohw, rows, cols, col = std::move(col)](Node<T>& n) {
    AlignedVector<T> gm(static_cast<std::size_t>(oc) * g.col_cols());
    detail::batch_to_channel_major(n.grad.data(), g.batch, oc, ohw, gm.data());
    ConstMatMap<T> gy(gm.data(), oc, cols);
    if (auto* gw = n.parent_grad(1))
      MatMap<T>(gw->data(), oc, rows).noalias() += gy * ConstMatMap<T>(col.data(), rows, cols).transpose();
    if (auto* gb = n.parent_grad(2))
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(gb->data(), oc) += gy.rowwise().sum();
    if (auto* gx = n.parent_grad(0)) {
      AlignedVector<T> gcol(g.col_rows() * g.col_cols());
      MatMap<T>(gcol.data(), rows, cols).noalias() = ConstMatMap<T>(n.parent_value(1).data(), oc, rows).transpose() * gy;
      detail::col2im(gcol.data(), g, gx->data());
    }
  });
}

/// Transposed convolution (adjoint of conv2d in x). x [B,IC,H,W], weight [IC,OC,k,k].
/// Output spatial size is (H-1)*stride - 2*pad + k.
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  if (x.shape().size() != 4 || weight.shape().size() != 4 || weight.dim(0) != x.dim(1) || weight.dim(2) != weight.dim(3) ||
      bias.size() != static_cast<std::size_t>(weight.dim(1)))
    detail::shape_fail("conv_transpose2d: x " + shape_str(x.shape()) + ", W " + shape_str(weight.shape()));
  const int b = x.dim(0), ic = x.dim(1), oc = weight.dim(1), k = weight.dim(2);
  const int oh = (x.dim(2) - 1) * stride - 2 * pad + k;
  const int ow = (x.dim(3) - 1) * stride - 2 * pad + k;
  // Geometry of the forward conv that maps the output back onto x.
  const auto g = detail::ConvGeometry::make(b, oc, oh, ow, k, stride, pad);
  if (g.out_h != x.dim(2) || g.out_w != x.dim(3)) detail::shape_fail("conv_transpose2d: non-invertible geometry");
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const auto rows = static_cast<Eigen::Index>(g.col_rows());
  const auto cols = static_cast<Eigen::Index>(g.col_cols());

  AlignedVector<T> xm(static_cast<std::size_t>(ic) * g.col_cols());
  detail::batch_to_channel_major(x.value().data(), b, ic, hw, xm.data());
  AlignedVector<T> col(g.col_rows() * g.col_cols());
  MatMap<T>(col.data(), rows, cols).noalias() =
      ConstMatMap<T>(weight.value().data(), ic, rows).transpose() * ConstMatMap<T>(xm.data(), ic, cols);
  Tensor<T> out(Shape{b, oc, oh, ow});
  detail::col2im(col.data(), g, out.data());
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  for (int i = 0; i < b; ++i)
    for (int c = 0; c < oc; ++c) {
      T* p = out.data() + (static_cast<std::size_t>(i) * oc + c) * ohw;
      const T bv = bias.value()[static_cast<std::size_t>(c)];
      for (std::size_t q = 0; q < ohw; ++q) p[q] += bv;
    }

  return Var<T>::make(std::move(out), {x, weight, bias}, [g, b, ic, oc, hw, ohw, rows, cols, xm = std::move(xm)](Node<T>& n) {
    AlignedVector<T> gcol(g.col_rows() * g.col_cols());
    detail::im2col(n.grad.data(), g, gcol.data());
    ConstMatMap<T> gc(gcol.data(), rows, cols);
    if (auto* gx = n.parent_grad(0)) {
      AlignedVector<T> gxm(static_cast<std::size_t>(ic) * g.col_cols());
      MatMap<T>(gxm.data(), ic, cols).noalias() = ConstMatMap<T>(n.parent_value(1).data(), ic, rows) * gc;
      detail::channel_to_batch_major(gxm.data(), b, ic, hw, gx->data(), true);
    }
    if (auto* gw = n.parent_grad(1))
      MatMap<T>(gw->data(), ic, rows).noalias() += ConstMatMap<T>(xm.data(), ic, cols) * gc.transpose();
    if (auto* gb = n.parent_grad(2))
      for (int i = 0; i < b; ++i)
        for (int c = 0; c < oc; ++c) {
          const T* p = n.grad.data() + (static_cast<std::size_t>(i) * oc + c) * ohw;
          T s{0};
          for (std::size_t q = 0; q < ohw; ++q) s += p[q];
          (*gb)[static_cast<std::size_t>(c)] += s;
        }
  });
}

}  // namespace slamp
