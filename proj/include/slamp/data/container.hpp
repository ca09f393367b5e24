#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/data/split.hpp"
#include "slamp/data/video.hpp"
#include "slamp/io/binary.hpp"
#include "slamp/io/png.hpp"

// On-disk dataset: a directory holding header.json and one entry per clip,
// either clip_NNNNNN.f32 (little-endian float32, T*C*H*W) or a directory
// clip_NNNNNN/ of 8-bit PNG frames frame_NNN.png.

namespace slamp {

enum class ClipEncoding { f32, png };

struct DatasetHeader {
  int length = 0, height = 0, width = 0, channels = 1, count = 0;
  std::uint64_t seed = 0;
  ClipEncoding encoding = ClipEncoding::f32;
  std::string config_hash;
  nlohmann::json generator;  // generator config, informational
  std::vector<std::uint64_t> clip_seeds;
};

inline void to_json(nlohmann::json& j, const DatasetHeader& h) {
  j = {{"T", h.length},
       {"H", h.height},
       {"W", h.width},
       {"channels", h.channels},
       {"count", h.count},
       {"seed", h.seed},
       {"encoding", h.encoding == ClipEncoding::f32 ? "f32" : "png"},
       {"config_hash", h.config_hash},
       {"generator", h.generator},
       {"clip_seeds", h.clip_seeds}};
}

inline void from_json(const nlohmann::json& j, DatasetHeader& h) {
  try {
    h.length = j.at("T").get<int>();
    h.height = j.at("H").get<int>();
    h.width = j.at("W").get<int>();
    h.channels = j.at("channels").get<int>();
    h.count = j.at("count").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    const std::string enc = j.value("encoding", "f32");
    if (enc != "f32" && enc != "png") throw FormatError("dataset header: unknown encoding '" + enc + "'");
    h.encoding = enc == "f32" ? ClipEncoding::f32 : ClipEncoding::png;
    h.config_hash = j.value("config_hash", "");
    h.generator = j.value("generator", nlohmann::json::object());
    h.clip_seeds = j.value("clip_seeds", std::vector<std::uint64_t>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset header: ") + e.what());
  }
  if (h.length < 1 || h.height < 1 || h.width < 1 || h.channels < 1 || h.count < 0)
    throw FormatError("dataset header: non-positive dimension");
}

namespace detail {
inline std::string clip_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%06d", i);
  return buf;
}
inline std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03d.png", t);
  return buf;
}
}  // namespace detail

/// Writes `clips` under `dir` (created if missing). PNG encoding quantises
/// intensities to 8 bits.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<Video>& clips, std::uint64_t seed,
                          ClipEncoding enc, const nlohmann::json& generator = nlohmann::json::object()) {
  if (clips.empty()) throw PreconditionError("write_dataset: no clips");
  std::filesystem::create_directories(dir);
  DatasetHeader h;
  const Video& f = clips[0];
  h.length = f.length();
  h.channels = f.channels();
  h.height = f.height();
  h.width = f.width();
  h.count = static_cast<int>(clips.size());
  h.seed = seed;
  h.encoding = enc;
  h.config_hash = f.config_hash;
  h.generator = generator;
  for (int i = 0; i < h.count; ++i) {
    const Video& v = clips[static_cast<std::size_t>(i)];
    if (v.frames.shape() != f.frames.shape()) detail::shape_fail("write_dataset: clips differ in shape");
    h.clip_seeds.push_back(v.seed);
    if (enc == ClipEncoding::f32) {
      std::vector<std::uint8_t> bytes;
      bytes.reserve(v.frames.size() * 4);
      binary::put_f32(bytes, v.frames.values().begin(), v.frames.values().end());
      binary::write_file((dir / (detail::clip_name(i) + ".f32")).string(), bytes);
    } else {
      if (h.channels != 1 && h.channels != 3) throw PreconditionError("write_dataset: PNG needs 1 or 3 channels");
      const auto clip_dir = dir / detail::clip_name(i);
      std::filesystem::create_directories(clip_dir);
      const std::size_t hw = static_cast<std::size_t>(h.height) * h.width;
      for (int t = 0; t < h.length; ++t) {
        Image8 img(h.height, h.width, h.channels);
        const float* src = v.frame_data(t);
        for (std::size_t p = 0; p < hw; ++p)
          for (int c = 0; c < h.channels; ++c) img.pixels[p * h.channels + c] = to_byte(src[c * hw + p]);
        write_png((clip_dir / detail::frame_name(t)).string(), img);
      }
    }
  }
  std::ofstream(dir / "header.json") << nlohmann::json(h).dump(2) << '\n';
}

inline DatasetHeader read_dataset_header(const std::filesystem::path& dir) {
  std::ifstream in(dir / "header.json");
  if (!in) throw FormatError("no header.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("header.json: " + std::string(e.what()));
  }
  return j.get<DatasetHeader>();
}

/// Reads clip `i` of a dataset whose header has already been parsed.
inline Video read_clip(const std::filesystem::path& dir, const DatasetHeader& h, int i) {
  if (i < 0 || i >= h.count) throw PreconditionError("read_clip: index " + std::to_string(i) + " out of range");
  const Shape shape{h.length, h.channels, h.height, h.width};
  const std::size_t n = shape_numel(shape);
  const std::size_t hw = static_cast<std::size_t>(h.height) * h.width;
  Video v;
  v.frames = Tensor<float>(shape);
  v.seed = i < static_cast<int>(h.clip_seeds.size()) ? h.clip_seeds[static_cast<std::size_t>(i)] : 0;
  v.config_hash = h.config_hash;
  if (h.encoding == ClipEncoding::f32) {
    const auto path = dir / (detail::clip_name(i) + ".f32");
    const auto bytes = binary::read_file(path.string());
    if (bytes.size() < n * 4)
      throw LengthError(path.string() + ": " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(n * 4));
    for (std::size_t k = 0; k < n; ++k) v.frames[k] = binary::get_f32(bytes.data() + 4 * k);
  } else {
    for (int t = 0; t < h.length; ++t) {
      const auto path = dir / detail::clip_name(i) / detail::frame_name(t);
      const Image8 img = read_png(path.string());
      if (img.height != h.height || img.width != h.width || img.channels != h.channels)
        throw FormatError(path.string() + ": frame size does not match header");
      float* dst = v.frames.data() + static_cast<std::size_t>(t) * h.channels * hw;
      for (std::size_t p = 0; p < hw; ++p)
        for (int c = 0; c < h.channels; ++c) dst[c * hw + p] = img.pixels[p * h.channels + c] / 255.0f;
    }
  }
  for (float x : v.frames.values())
    if (!(x >= 0.0f && x <= 1.0f)) throw FormatError("clip " + std::to_string(i) + ": intensity outside [0, 1]");
  return v;
}

inline std::vector<Video> read_dataset(const std::filesystem::path& dir) {
  const DatasetHeader h = read_dataset_header(dir);
  std::vector<Video> out;
  for (int i = 0; i < h.count; ++i) out.push_back(read_clip(dir, h, i));
  return out;
}

/// Dataset on disk, read one clip at a time.
class DiskSource : public VideoSource {
 public:
  explicit DiskSource(std::filesystem::path dir) : dir_(std::move(dir)), header_(read_dataset_header(dir_)) {}
  std::size_t size() const override { return static_cast<std::size_t>(header_.count); }
  Video get(std::size_t i) const override { return read_clip(dir_, header_, static_cast<int>(i)); }
  const DatasetHeader& header() const noexcept { return header_; }

 private:
  std::filesystem::path dir_;
  DatasetHeader header_;
};

}  // namespace slamp
