#pragma once

#include <optional>
#include <vector>

#include "slamp/io/png.hpp"
#include "slamp/tensor.hpp"

namespace slamp {

/// RGB cell [H, W, 3] in [0, 1].
using RgbImage = Tensor<double>;

/// [C, H, W] with C = 1 or 3 into an RGB cell.
template <class T>
RgbImage to_rgb(const Tensor<T>& chw) {
  if (chw.rank() != 3 || (chw.dim(0) != 1 && chw.dim(0) != 3))
    detail::shape_fail("to_rgb expects [1|3,H,W], got " + shape_str(chw.shape()));
  const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  RgbImage out(Shape{h, w, 3});
  for (std::size_t i = 0; i < hw; ++i)
    for (int k = 0; k < 3; ++k) out[i * 3 + static_cast<std::size_t>(k)] = static_cast<double>(chw[(c == 1 ? 0 : k) * hw + i]);
  return out;
}

/// Rows of equally sized cells separated by `pad` pixels of `background`;
/// missing cells (nullopt) stay background.
inline Image8 image_grid(const std::vector<std::vector<std::optional<RgbImage>>>& rows, int pad = 2,
                         double background = 0.5) {
  int h = 0, w = 0;
  std::size_t cols = 0;
  for (const auto& row : rows) {
    cols = std::max(cols, row.size());
    for (const auto& cell : row)
      if (cell) {
        if (cell->rank() != 3 || cell->dim(2) != 3) detail::shape_fail("image_grid: cells must be [H,W,3]");
        if (h == 0) h = cell->dim(0), w = cell->dim(1);
        if (cell->dim(0) != h || cell->dim(1) != w) detail::shape_fail("image_grid: cells differ in size");
      }
  }
  if (h == 0) throw PreconditionError("image_grid: no cells");
  const int ncols = static_cast<int>(cols), nrows = static_cast<int>(rows.size());
  Image8 img(pad + nrows * (h + pad), pad + ncols * (w + pad), 3, to_byte(background));
  for (int r = 0; r < nrows; ++r)
    for (int c = 0; c < static_cast<int>(rows[static_cast<std::size_t>(r)].size()); ++c) {
      const auto& cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!cell) continue;
      const int y0 = pad + r * (h + pad), x0 = pad + c * (w + pad);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int k = 0; k < 3; ++k)
            img.at(y0 + y, x0 + x)[k] = to_byte((*cell)[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(k)]);
    }
  return img;
}

}  // namespace slamp
