#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/data/glyphs.hpp"
#include "slamp/data/video.hpp"
#include "slamp/io/hash.hpp"
#include "slamp/random.hpp"

namespace slamp {

struct DigitState {
  int glyph_index = 0;
  double row = 0, col = 0;    // top-left corner of the glyph
  double d_row = 0, d_col = 0;  // per-frame velocity
};

/// Region a glyph may occupy plus the bounce speed range.
struct Canvas {
  int height = 32, width = 32;
  int glyph_height = 16, glyph_width = 16;
  double speed_min = 1.0, speed_max = 2.0;

  double max_row() const { return height - glyph_height; }
  double max_col() const { return width - glyph_width; }
  void validate() const {
    if (glyph_height > height || glyph_width > width)
      throw ConfigError("glyph " + std::to_string(glyph_height) + "x" + std::to_string(glyph_width) +
                        " does not fit canvas " + std::to_string(height) + "x" + std::to_string(width));
    if (glyph_height < 1 || glyph_width < 1) throw ConfigError("glyph size must be positive");
    if (!(speed_min >= 0.0 && speed_min <= speed_max)) throw ConfigError("speed range must satisfy 0 <= min <= max");
  }
};

/// Advances one digit by its velocity. An axis that would leave the canvas
/// is reflected about the violated bound (r' = 2 * bound - r) and a new
/// velocity is drawn: direction uniform in the half-plane pointing away
/// from the wall(s) hit, speed uniform in [speed_min, speed_max].
inline DigitState step_digit(const DigitState& s, const Canvas& canvas, std::mt19937_64& rng,
                             bool* bounced = nullptr) {
  canvas.validate();
  DigitState n = s;
  n.row += s.d_row;
  n.col += s.d_col;
  int sign_row = 0, sign_col = 0;  // required sign of the new velocity component
  auto reflect = [](double& v, double hi, int& sign) {
    if (v < 0.0) {
      v = -v;
      sign = +1;
    } else if (v > hi) {
      v = 2.0 * hi - v;
      sign = -1;
    }
    v = std::clamp(v, 0.0, hi);  // only active when one step exceeds the free range
  };
  reflect(n.row, canvas.max_row(), sign_row);
  reflect(n.col, canvas.max_col(), sign_col);
  const bool hit = sign_row != 0 || sign_col != 0;
  if (hit) {
    const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    const double speed = std::uniform_real_distribution<double>(canvas.speed_min, canvas.speed_max)(rng);
    double dr = speed * std::sin(angle), dc = speed * std::cos(angle);
    // Mirroring a uniform direction into the allowed half-plane keeps it uniform there.
    if (sign_row != 0 && dr * sign_row < 0) dr = -dr;
    if (sign_col != 0 && dc * sign_col < 0) dc = -dc;
    n.d_row = dr;
    n.d_col = dc;
  }
  if (bounced) *bounced = hit;
  return n;
}

struct MovingMnistConfig {
  int canvas = 32;
  int num_digits = 1;
  int length = 10;
  int digit_size = 16;  // glyphs are resized to this edge length
  double speed_min = 1.0, speed_max = 2.0;

  Canvas canvas_bounds() const { return {canvas, canvas, digit_size, digit_size, speed_min, speed_max}; }

  void validate() const {
    if (length < 1) throw ConfigError("length must be >= 1");
    if (num_digits != 1 && num_digits != 2) throw ConfigError("num_digits must be 1 or 2");
    canvas_bounds().validate();
  }

  /// FNV-1a over the canonical JSON form.
  std::string hash() const {
    return fnv1a_hex(nlohmann::json(*this).dump());
  }

  friend void to_json(nlohmann::json& j, const MovingMnistConfig& c) {
    j = {{"canvas", c.canvas},         {"num_digits", c.num_digits}, {"length", c.length},
         {"digit_size", c.digit_size}, {"speed_min", c.speed_min},   {"speed_max", c.speed_max}};
  }
  friend void from_json(const nlohmann::json& j, MovingMnistConfig& c) {
    c.canvas = j.value("canvas", c.canvas);
    c.num_digits = j.value("num_digits", c.num_digits);
    c.length = j.value("length", c.length);
    c.digit_size = j.value("digit_size", c.digit_size);
    c.speed_min = j.value("speed_min", c.speed_min);
    c.speed_max = j.value("speed_max", c.speed_max);
  }
};

/// Continuous digit states per frame ([t][digit]) and whether the step
/// into frame t bounced.
struct Trajectory {
  std::vector<std::vector<DigitState>> states;
  std::vector<std::vector<bool>> bounced;
};

namespace detail {

inline void composite_max(float* frame, int canvas, const std::vector<float>& glyph, int size, int row, int col) {
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      float& dst = frame[(row + r) * canvas + col + c];
      dst = std::max(dst, glyph[static_cast<std::size_t>(r) * size + c]);
    }
}

}  // namespace detail

/// Pure function of (config, digits, seed).
inline Video generate_moving_mnist(const MovingMnistConfig& cfg, const ImageSet& digits, std::uint64_t seed,
                                   Trajectory* trace = nullptr) {
  cfg.validate();
  if (digits.count < 1) throw ConfigError("generate_moving_mnist: empty digit set");
  const Canvas canvas = cfg.canvas_bounds();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, digits.count - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<DigitState> states(static_cast<std::size_t>(cfg.num_digits));
  std::vector<std::vector<float>> glyphs;
  for (auto& s : states) {
    s.glyph_index = pick(rng);
    s.row = unit(rng) * canvas.max_row();
    s.col = unit(rng) * canvas.max_col();
    const double angle = unit(rng) * 2.0 * std::numbers::pi;
    const double speed = cfg.speed_min + unit(rng) * (cfg.speed_max - cfg.speed_min);
    s.d_row = speed * std::sin(angle);
    s.d_col = speed * std::cos(angle);
    glyphs.push_back(resize_image(digits.image(s.glyph_index), digits.height, digits.width, cfg.digit_size));
  }

  Video v;
  v.seed = seed;
  v.config_hash = cfg.hash();
  v.frames = Tensor<float>(Shape{cfg.length, 1, cfg.canvas, cfg.canvas});
  const std::size_t fs = static_cast<std::size_t>(cfg.canvas) * cfg.canvas;
  if (trace) *trace = {};
  for (int t = 0; t < cfg.length; ++t) {
    std::vector<bool> hits(states.size(), false);
    if (t > 0)
      for (std::size_t d = 0; d < states.size(); ++d) {
        bool b = false;
        states[d] = step_digit(states[d], canvas, rng, &b);
        hits[d] = b;
      }
    float* frame = v.frames.data() + static_cast<std::size_t>(t) * fs;
    for (std::size_t d = 0; d < states.size(); ++d)
      detail::composite_max(frame, cfg.canvas, glyphs[d], cfg.digit_size, static_cast<int>(std::lround(states[d].row)),
                            static_cast<int>(std::lround(states[d].col)));
    if (trace) {
      trace->states.push_back(states);
      trace->bounced.push_back(std::move(hits));
    }
  }
  return v;
}

}  // namespace slamp
