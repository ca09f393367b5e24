#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "slamp/io/png.hpp"

// Minimal raster line plots (curves with shaded confidence bands) so the
// evaluation figures need no plotting dependency.

namespace slamp {

struct PlotSeries {
  std::string label;
  std::vector<double> y;
  std::vector<double> band;  // half-width around y; empty for none
  std::array<double, 3> color{0.1, 0.3, 0.8};
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<double> x;
  std::vector<PlotSeries> series;
  int width = 640, height = 400;
};

namespace detail {

// 3x5 bitmap glyphs, one string per row, '#' = ink.
inline const std::array<const char*, 5>* glyph(char ch) {
  struct G {
    char c;
    std::array<const char*, 5> rows;
  };
  static const G table[] = {
      {'0', {"###", "# #", "# #", "# #", "###"}}, {'1', {" # ", "## ", " # ", " # ", "###"}},
      {'2', {"###", "  #", "###", "#  ", "###"}}, {'3', {"###", "  #", " ##", "  #", "###"}},
      {'4', {"# #", "# #", "###", "  #", "  #"}}, {'5', {"###", "#  ", "###", "  #", "###"}},
      {'6', {"###", "#  ", "###", "# #", "###"}}, {'7', {"###", "  #", " # ", " # ", " # "}},
      {'8', {"###", "# #", "###", "# #", "###"}}, {'9', {"###", "# #", "###", "  #", "###"}},
      {'A', {" # ", "# #", "###", "# #", "# #"}}, {'B', {"## ", "# #", "## ", "# #", "## "}},
      {'C', {" ##", "#  ", "#  ", "#  ", " ##"}}, {'D', {"## ", "# #", "# #", "# #", "## "}},
      {'E', {"###", "#  ", "## ", "#  ", "###"}}, {'F', {"###", "#  ", "## ", "#  ", "#  "}},
      {'G', {" ##", "#  ", "# #", "# #", " ##"}}, {'H', {"# #", "# #", "###", "# #", "# #"}},
      {'I', {"###", " # ", " # ", " # ", "###"}}, {'J', {"  #", "  #", "  #", "# #", " # "}},
      {'K', {"# #", "# #", "## ", "# #", "# #"}}, {'L', {"#  ", "#  ", "#  ", "#  ", "###"}},
      {'M', {"# #", "###", "###", "# #", "# #"}}, {'N', {"## ", "# #", "# #", "# #", "# #"}},
      {'O', {" # ", "# #", "# #", "# #", " # "}}, {'P', {"## ", "# #", "## ", "#  ", "#  "}},
      {'Q', {" # ", "# #", "# #", "## ", " ##"}}, {'R', {"## ", "# #", "## ", "# #", "# #"}},
      {'S', {" ##", "#  ", " # ", "  #", "## "}}, {'T', {"###", " # ", " # ", " # ", " # "}},
      {'U', {"# #", "# #", "# #", "# #", "###"}}, {'V', {"# #", "# #", "# #", "# #", " # "}},
      {'W', {"# #", "# #", "###", "###", "# #"}}, {'X', {"# #", "# #", " # ", "# #", "# #"}},
      {'Y', {"# #", "# #", " # ", " # ", " # "}}, {'Z', {"###", "  #", " # ", "#  ", "###"}},
      {'.', {"   ", "   ", "   ", "   ", " # "}}, {'-', {"   ", "   ", "###", "   ", "   "}},
      {'(', {" # ", "#  ", "#  ", "#  ", " # "}}, {')', {" # ", "  #", "  #", "  #", " # "}},
      {'/', {"  #", "  #", " # ", "#  ", "#  "}}, {':', {"   ", " # ", "   ", " # ", "   "}},
      {'_', {"   ", "   ", "   ", "   ", "###"}}, {'%', {"# #", "  #", " # ", "#  ", "# #"}},
      {'=', {"   ", "###", "   ", "###", "   "}}, {'+', {"   ", " # ", "###", " # ", "   "}},
  };
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (const auto& g : table)
    if (g.c == u) return &g.rows;
  return nullptr;
}

class Canvas8 {
 public:
  explicit Canvas8(Image8& img) : img_(img) {}

  void blend(int x, int y, const std::array<double, 3>& c, double alpha = 1.0) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    std::uint8_t* p = img_.at(y, x);
    for (int k = 0; k < 3; ++k) p[k] = to_byte((1 - alpha) * p[k] / 255.0 + alpha * c[static_cast<std::size_t>(k)]);
  }

  void line(double x0, double y0, double x1, double y1, const std::array<double, 3>& c, int thickness = 1) {
    const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int n = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0))), y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dy = 0; dy < thickness; ++dy)
        for (int dx = 0; dx < thickness; ++dx) blend(x + dx - thickness / 2, y + dy - thickness / 2, c);
    }
  }

  void rect(int x0, int y0, int x1, int y1, const std::array<double, 3>& c, double alpha = 1.0) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) blend(x, y, c, alpha);
  }

  static int text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 4 * scale; }

  void text(int x, int y, const std::string& s, int scale = 2, const std::array<double, 3>& c = {0, 0, 0}) {
    for (char ch : s) {
      if (const auto* g = glyph(ch))
        for (int r = 0; r < 5; ++r)
          for (int col = 0; col < 3; ++col)
            if ((*g)[static_cast<std::size_t>(r)][col] == '#') rect(x + col * scale, y + r * scale, x + (col + 1) * scale - 1, y + (r + 1) * scale - 1, c);
      x += 4 * scale;
    }
  }

 private:
  Image8& img_;
};

inline double nice_step(double range, int target_ticks) {
  const double raw = range / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10 * mag;
}

inline std::string tick_label(double v, double step) {
  char buf[32];
  const int decimals = step >= 1 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-6 ? 0.0 : v);
  return buf;
}

}  // namespace detail

inline Image8 render_line_plot(const PlotSpec& spec) {
  if (spec.x.empty()) throw PreconditionError("render_line_plot: no x values");
  for (const auto& s : spec.series) {
    if (s.y.size() != spec.x.size()) throw PreconditionError("render_line_plot: series '" + s.label + "' length mismatch");
    if (!s.band.empty() && s.band.size() != s.y.size())
      throw PreconditionError("render_line_plot: band of '" + s.label + "' length mismatch");
  }
  Image8 img(spec.height, spec.width, 3, 255);
  detail::Canvas8 cv(img);
  const int left = 70, right = 20, top = 40, bottom = 50;
  const int pw = spec.width - left - right, ph = spec.height - top - bottom;

  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double b = s.band.empty() ? 0.0 : s.band[i];
      ylo = std::min(ylo, s.y[i] - b);
      yhi = std::max(yhi, s.y[i] + b);
    }
  if (!std::isfinite(ylo)) ylo = 0, yhi = 1;
  if (yhi - ylo < 1e-9) ylo -= 0.5, yhi += 0.5;
  const double ystep = detail::nice_step(yhi - ylo, 5);
  ylo = std::floor(ylo / ystep) * ystep;
  yhi = std::ceil(yhi / ystep) * ystep;
  const double xlo = spec.x.front(), xhi = spec.x.size() > 1 ? spec.x.back() : spec.x.front() + 1;
  auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double y) { return top + (1 - (y - ylo) / (yhi - ylo)) * ph; };

  const std::array<double, 3> grid{0.88, 0.88, 0.88}, axis{0, 0, 0};
  for (double y = ylo; y <= yhi + ystep * 1e-6; y += ystep) {
    cv.line(left, py(y), left + pw, py(y), grid);
    const std::string lab = detail::tick_label(y, ystep);
    cv.text(left - 8 - detail::Canvas8::text_width(lab, 2), static_cast<int>(py(y)) - 5, lab);
  }
  const double xstep = std::max(1.0, detail::nice_step(xhi - xlo, 8));
  for (double x = xlo; x <= xhi + 1e-9; x += xstep) {
    cv.line(px(x), top + ph, px(x), top + ph + 5, axis);
    const std::string lab = detail::tick_label(x, xstep);
    cv.text(static_cast<int>(px(x)) - detail::Canvas8::text_width(lab, 2) / 2, top + ph + 10, lab);
  }
  cv.line(left, top, left, top + ph, axis);
  cv.line(left, top + ph, left + pw, top + ph, axis);

  for (const auto& s : spec.series) {
    if (s.band.empty()) continue;
    for (std::size_t i = 0; i + 1 < s.y.size(); ++i) {
      const int xa = static_cast<int>(std::lround(px(spec.x[i]))), xb = static_cast<int>(std::lround(px(spec.x[i + 1])));
      for (int x = xa; x <= xb; ++x) {
        const double t = xb == xa ? 0 : static_cast<double>(x - xa) / (xb - xa);
        const double m = s.y[i] + t * (s.y[i + 1] - s.y[i]), b = s.band[i] + t * (s.band[i + 1] - s.band[i]);
        for (int y = static_cast<int>(std::lround(py(m + b))); y <= static_cast<int>(std::lround(py(m - b))); ++y)
          cv.blend(x, y, s.color, 0.18);
      }
    }
  }
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i + 1 < s.y.size(); ++i) cv.line(px(spec.x[i]), py(s.y[i]), px(spec.x[i + 1]), py(s.y[i + 1]), s.color, 2);
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const int cx = static_cast<int>(std::lround(px(spec.x[i]))), cy = static_cast<int>(std::lround(py(s.y[i])));
      cv.rect(cx - 2, cy - 2, cx + 2, cy + 2, s.color);
    }
  }

  cv.text(left, 12, spec.title, 2);
  cv.text(left + pw / 2 - detail::Canvas8::text_width(spec.x_label, 2) / 2, spec.height - 18, spec.x_label, 2);
  cv.text(4, top - 16, spec.y_label, 2);
  int ly = top + 6;
  for (const auto& s : spec.series) {
    const int tw = detail::Canvas8::text_width(s.label, 2);
    const int lx = left + pw - tw - 24;
    cv.rect(lx, ly, lx + 12, ly + 9, s.color);
    cv.text(lx + 18, ly, s.label, 2);
    ly += 16;
  }
  return img;
}

}  // namespace slamp
