#pragma once

#include <algorithm>
#include <cmath>

#include "slamp/ops.hpp"

// Differentiable inverse warping and mask fusion.
//
// Flow fields are [B, 2, H, W] with channel 0 the row displacement and
// channel 1 the column displacement. They point from the target pixel to
// the source location: warped(p) = source(p + flow(p)).

namespace slamp {

namespace detail {

/// Shared kernel for bilinear_sample and inverse_warp. When `add_identity`
/// is set, `coords` holds displacements relative to each output pixel.
template <class T>
Var<T> sample_bilinear_border(const Var<T>& image, const Var<T>& coords, bool add_identity) {
  if (image.shape().size() != 4 || coords.shape().size() != 4 || coords.dim(1) != 2 || coords.dim(0) != image.dim(0))
    shape_fail("bilinear sampling: image " + shape_str(image.shape()) + ", coords " + shape_str(coords.shape()));
  if (add_identity && (coords.dim(2) != image.dim(2) || coords.dim(3) != image.dim(3)))
    shape_fail("inverse_warp: flow " + shape_str(coords.shape()) + " does not match image " + shape_str(image.shape()));

  const int b = image.dim(0), c = image.dim(1), h = image.dim(2), w = image.dim(3);
  const int oh = coords.dim(2), ow = coords.dim(3);
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  struct Tap {
    int r0, r1, c0, c1;
    T wr, wc;
    bool row_inside, col_inside;  // false where the border clamp is active
  };
  auto tap = [=](const T* cd, int n, int i, int j) {
    const std::size_t base = static_cast<std::size_t>(n) * 2 * ohw + static_cast<std::size_t>(i) * ow + j;
    T r = cd[base], q = cd[base + ohw];
    if (add_identity) {
      r += static_cast<T>(i);
      q += static_cast<T>(j);
    }
    const T hi_r = static_cast<T>(h - 1), hi_c = static_cast<T>(w - 1);
    Tap t{};
    t.row_inside = r >= T{0} && r <= hi_r;
    t.col_inside = q >= T{0} && q <= hi_c;
    r = std::clamp(r, T{0}, hi_r);
    q = std::clamp(q, T{0}, hi_c);
    t.r0 = static_cast<int>(std::floor(r));
    t.c0 = static_cast<int>(std::floor(q));
    t.r1 = std::min(t.r0 + 1, h - 1);
    t.c1 = std::min(t.c0 + 1, w - 1);
    t.wr = r - static_cast<T>(t.r0);
    t.wc = q - static_cast<T>(t.c0);
    return t;
  };

  Tensor<T> out(Shape{b, c, oh, ow});
  const T* img = image.value().data();
  const T* cd = coords.value().data();
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        const Tap t = tap(cd, n, i, j);
        for (int ch = 0; ch < c; ++ch) {
          const T* p = img + (static_cast<std::size_t>(n) * c + ch) * hw;
          const T v = (T{1} - t.wr) * ((T{1} - t.wc) * p[t.r0 * w + t.c0] + t.wc * p[t.r0 * w + t.c1]) +
                      t.wr * ((T{1} - t.wc) * p[t.r1 * w + t.c0] + t.wc * p[t.r1 * w + t.c1]);
          out[(static_cast<std::size_t>(n) * c + ch) * ohw + static_cast<std::size_t>(i) * ow + j] = v;
        }
      }

  return Var<T>::make(std::move(out), {image, coords}, [=](Node<T>& node) {
    const T* im = node.parent_value(0).data();
    const T* co = node.parent_value(1).data();
    Tensor<T>* gi = node.parent_grad(0);
    Tensor<T>* gc = node.parent_grad(1);
    for (int n = 0; n < b; ++n)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          const Tap t = tap(co, n, i, j);
          T dr{0}, dc{0};
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t plane = (static_cast<std::size_t>(n) * c + ch) * hw;
            const T g = node.grad[(static_cast<std::size_t>(n) * c + ch) * ohw + static_cast<std::size_t>(i) * ow + j];
            if (g == T{0}) continue;
            const T* p = im + plane;
            const T v00 = p[t.r0 * w + t.c0], v01 = p[t.r0 * w + t.c1];
            const T v10 = p[t.r1 * w + t.c0], v11 = p[t.r1 * w + t.c1];
            if (gi) {
              T* q = gi->data() + plane;
              q[t.r0 * w + t.c0] += g * (T{1} - t.wr) * (T{1} - t.wc);
              q[t.r0 * w + t.c1] += g * (T{1} - t.wr) * t.wc;
              q[t.r1 * w + t.c0] += g * t.wr * (T{1} - t.wc);
              q[t.r1 * w + t.c1] += g * t.wr * t.wc;
            }
            dr += g * ((T{1} - t.wc) * (v10 - v00) + t.wc * (v11 - v01));
            dc += g * ((T{1} - t.wr) * (v01 - v00) + t.wr * (v11 - v10));
          }
          if (gc) {
            const std::size_t base = static_cast<std::size_t>(n) * 2 * ohw + static_cast<std::size_t>(i) * ow + j;
            if (t.row_inside) (*gc)[base] += dr;
            if (t.col_inside) (*gc)[base + ohw] += dc;
          }
        }
  });
}

}  // namespace detail

/// Samples `image` [B,C,H,W] at absolute (row, col) positions `coords`
/// [B,2,OH,OW] with bilinear interpolation. Coordinates outside the image
/// are clamped to the border. Differentiable in both arguments.
template <class T>
Var<T> bilinear_sample(const Var<T>& image, const Var<T>& coords) {
  return detail::sample_bilinear_border(image, coords, false);
}

/// output(p) = source(p + flow(p)).
template <class T>
Var<T> inverse_warp(const Var<T>& source, const Var<T>& flow) {
  return detail::sample_bilinear_border(source, flow, true);
}

/// Identity sampling grid [B,2,H,W] of absolute (row, col) coordinates.
template <class T>
Tensor<T> identity_grid(int batch, int height, int width) {
  Tensor<T> g(Shape{batch, 2, height, width});
  for (int n = 0; n < batch; ++n)
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        g.at(n, 0, i, j) = static_cast<T>(i);
        g.at(n, 1, i, j) = static_cast<T>(j);
      }
  return g;
}

/// Convex fusion: mask * appearance + (1 - mask) * motion, with a
/// single-channel mask [B,1,H,W] broadcast over image channels.
template <class T>
Var<T> combine(const Var<T>& appearance, const Var<T>& motion, const Var<T>& mask) {
  if (appearance.shape() != motion.shape() || appearance.shape().size() != 4 || mask.shape().size() != 4 ||
      mask.dim(0) != appearance.dim(0) || mask.dim(1) != 1 || mask.dim(2) != appearance.dim(2) ||
      mask.dim(3) != appearance.dim(3))
    detail::shape_fail("combine: appearance " + shape_str(appearance.shape()) + ", motion " + shape_str(motion.shape()) +
                       ", mask " + shape_str(mask.shape()));
  for (T m : mask.value().values())
    if (!(m >= T{0} && m <= T{1})) throw PreconditionError("combine: mask value outside [0, 1]");

  const int b = appearance.dim(0), c = appearance.dim(1);
  const std::size_t hw = static_cast<std::size_t>(appearance.dim(2)) * appearance.dim(3);
  Tensor<T> out(appearance.shape());
  const T* xp = appearance.value().data();
  const T* xf = motion.value().data();
  const T* m = mask.value().data();
  for (int n = 0; n < b; ++n)
    for (int ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < hw; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(n) * c + ch) * hw + k;
        const T mk = m[static_cast<std::size_t>(n) * hw + k];
        out[idx] = mk * xp[idx] + (T{1} - mk) * xf[idx];
      }
  return Var<T>::make(std::move(out), {appearance, motion, mask}, [b, c, hw](Node<T>& node) {
    const T* xp = node.parent_value(0).data();
    const T* xf = node.parent_value(1).data();
    const T* m = node.parent_value(2).data();
    Tensor<T>* gp = node.parent_grad(0);
    Tensor<T>* gf = node.parent_grad(1);
    Tensor<T>* gm = node.parent_grad(2);
    for (int n = 0; n < b; ++n)
      for (int ch = 0; ch < c; ++ch)
        for (std::size_t k = 0; k < hw; ++k) {
          const std::size_t idx = (static_cast<std::size_t>(n) * c + ch) * hw + k;
          const std::size_t midx = static_cast<std::size_t>(n) * hw + k;
          const T g = node.grad[idx];
          if (gp) (*gp)[idx] += g * m[midx];
          if (gf) (*gf)[idx] += g * (T{1} - m[midx]);
          if (gm) (*gm)[midx] += g * (xp[idx] - xf[idx]);
        }
  });
}

}  // namespace slamp
