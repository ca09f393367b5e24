#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "slamp/errors.hpp"

namespace slamp {

/// Grayscale images, count x height x width, intensities in [0, 1].
struct ImageSet {
  int count = 0, height = 0, width = 0;
  std::vector<float> pixels;

  std::size_t image_size() const { return static_cast<std::size_t>(height) * width; }
  const float* image(int i) const { return pixels.data() + static_cast<std::size_t>(i) * image_size(); }
  float* image(int i) { return pixels.data() + static_cast<std::size_t>(i) * image_size(); }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

namespace detail {
inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
}  // namespace detail

/// Parses an IDX unsigned-byte image tensor (magic 0x00000803).
inline ImageSet parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw LengthError("idx: file shorter than its magic number");
  const std::uint32_t magic = detail::read_be32(bytes.data());
  if (magic != kIdxImageMagic) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw FormatError(std::string("idx: magic ") + buf + " is not an unsigned-byte image tensor (0x00000803)");
  }
  if (bytes.size() < 16) throw LengthError("idx: truncated header");
  ImageSet s;
  const std::uint32_t n = detail::read_be32(bytes.data() + 4), h = detail::read_be32(bytes.data() + 8),
                      w = detail::read_be32(bytes.data() + 12);
  if (n == 0 || h == 0 || w == 0) throw FormatError("idx: zero dimension in header");
  const std::uint64_t payload = std::uint64_t{n} * h * w;
  if (bytes.size() - 16 < payload)
    throw LengthError("idx: payload has " + std::to_string(bytes.size() - 16) + " bytes, header declares " +
                      std::to_string(payload));
  s.count = static_cast<int>(n);
  s.height = static_cast<int>(h);
  s.width = static_cast<int>(w);
  s.pixels.resize(payload);
  for (std::uint64_t i = 0; i < payload; ++i) s.pixels[i] = static_cast<float>(bytes[16 + i]) / 255.0f;
  return s;
}

/// Inverse of parse_idx; intensities are rounded to the nearest byte.
inline std::vector<std::uint8_t> serialize_idx(const ImageSet& s) {
  if (s.count < 1 || s.pixels.size() != static_cast<std::size_t>(s.count) * s.image_size())
    throw PreconditionError("serialize_idx: pixel count does not match dimensions");
  std::vector<std::uint8_t> out;
  out.reserve(16 + s.pixels.size());
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(s.count));
  detail::write_be32(out, static_cast<std::uint32_t>(s.height));
  detail::write_be32(out, static_cast<std::uint32_t>(s.width));
  for (float v : s.pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw PreconditionError("serialize_idx: intensity outside [0, 1]");
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  }
  return out;
}

/// Reads an IDX file from disk; gzip-compressed files are inflated transparently.
inline ImageSet load_idx_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError("idx: cannot open " + path);
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  gzclose(f);
  if (n < 0) throw FormatError("idx: read error in " + path);
  return parse_idx(bytes);
}

}  // namespace slamp
