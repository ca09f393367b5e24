#pragma once

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/data/moving_mnist.hpp"
#include "slamp/eval/best_of_n.hpp"
#include "slamp/model/config.hpp"
#include "slamp/train/train_loop.hpp"

// One config file drives every subcommand. A file may name a `preset`; its
// own keys are then merged over that preset (RFC 7386 merge patch).

namespace slamp::cli {

inline constexpr const char* kDataRootEnv = "SLAMP_DATA_ROOT";

struct DataSettings {
  MovingMnistConfig generator;
  int num_clips = 4000;
  std::uint64_t seed = 1;
  std::string encoding = "f32";
  int glyph_count = 1000;  // procedural digit bank
  std::uint64_t glyph_seed = 3;
  std::array<double, 3> split{0.9, 0.05, 0.05};
};

struct EvalSettings {
  int num_samples = 100;
  int sample_batch = 20;
  int num_videos = 100;  // leading test clips scored; 0 means all
  std::vector<std::string> metrics{"psnr", "ssim"};
  std::uint64_t seed = 0;
  RolloutConfig rollout;
};

struct RunConfig {
  std::string preset;
  DataSettings data;
  ModelConfig model;
  TrainConfig train;
  EvalSettings eval;

  std::vector<Metric> eval_metrics() const {
    std::vector<Metric> out;
    for (const auto& m : eval.metrics) {
      if (m == "psnr")
        out.push_back(Metric::psnr);
      else if (m == "ssim")
        out.push_back(Metric::ssim);
      else
        throw ConfigError("unknown metric '" + m + "' (expected psnr or ssim)");
    }
    return out;
  }

  void validate() const {
    data.generator.validate();
    if (data.num_clips < 3) throw ConfigError("data.num_clips must be >= 3");
    if (data.encoding != "f32" && data.encoding != "png") throw ConfigError("data.encoding must be f32 or png");
    if (data.glyph_count < 1) throw ConfigError("data.glyph_count must be positive");
    model.validate();
    if (model.image_size != data.generator.canvas)
      throw ConfigError("model.image_size (" + std::to_string(model.image_size) + ") must equal data.generator.canvas (" +
                        std::to_string(data.generator.canvas) + ")");
    if (model.channels != 1) throw ConfigError("model.channels must be 1 for Moving MNIST");
    train.validate(model.variant);
    eval.rollout.validate(model.variant);
    if (train.rollout.total_frames() > data.generator.length)
      throw ConfigError("train.rollout needs " + std::to_string(train.rollout.total_frames()) + " frames, clips have " +
                        std::to_string(data.generator.length));
    if (eval.rollout.total_frames() > data.generator.length)
      throw ConfigError("eval.rollout needs " + std::to_string(eval.rollout.total_frames()) + " frames, clips have " +
                        std::to_string(data.generator.length));
    BestOfNConfig b{eval.num_samples, eval.seed, eval.rollout, eval_metrics(), eval.sample_batch};
    b.validate();
    if (eval.num_videos < 0) throw ConfigError("eval.num_videos must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const DataSettings& d) {
  j = {{"generator", d.generator}, {"num_clips", d.num_clips},     {"seed", d.seed},
       {"encoding", d.encoding},   {"glyph_count", d.glyph_count}, {"glyph_seed", d.glyph_seed},
       {"split", d.split}};
}
inline void from_json(const nlohmann::json& j, DataSettings& d) {
  if (j.contains("generator")) from_json(j.at("generator"), d.generator);
  d.num_clips = j.value("num_clips", d.num_clips);
  d.seed = j.value("seed", d.seed);
  d.encoding = j.value("encoding", d.encoding);
  d.glyph_count = j.value("glyph_count", d.glyph_count);
  d.glyph_seed = j.value("glyph_seed", d.glyph_seed);
  d.split = j.value("split", d.split);
}

inline void to_json(nlohmann::json& j, const EvalSettings& e) {
  j = {{"num_samples", e.num_samples}, {"sample_batch", e.sample_batch}, {"num_videos", e.num_videos},
       {"metrics", e.metrics},         {"seed", e.seed},                 {"rollout", e.rollout}};
}
inline void from_json(const nlohmann::json& j, EvalSettings& e) {
  e.num_samples = j.value("num_samples", e.num_samples);
  e.sample_batch = j.value("sample_batch", e.sample_batch);
  e.num_videos = j.value("num_videos", e.num_videos);
  e.metrics = j.value("metrics", e.metrics);
  e.seed = j.value("seed", e.seed);
  if (j.contains("rollout")) from_json(j.at("rollout"), e.rollout);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"preset", c.preset}, {"data", c.data}, {"model", c.model}, {"train", c.train}, {"eval", c.eval}};
}
inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c.preset = j.value("preset", c.preset);
  if (j.contains("data")) from_json(j.at("data"), c.data);
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("eval")) from_json(j.at("eval"), c.eval);
}

/// 1-digit 32x32 clips sized to train on one CPU core in under half an hour.
inline RunConfig desk_preset() {
  RunConfig c;
  c.preset = "smmnist-desk";
  c.data.generator = MovingMnistConfig{32, 1, 15, 16, 1.0, 2.0};
  c.model.variant = Variant::slamp;
  c.model.image_size = 32;
  c.model.feature_dim = 32;
  c.model.latent_pixel = 10;
  c.model.latent_flow = 10;
  c.model.rnn_units = 64;
  c.model.head_layers = 1;
  c.model.predictor_layers = 1;
  c.model.encoder_channels = {8, 16, 32};
  c.model.mask_width = 16;
  c.model.beta = 1e-4;
  c.train.rollout = RolloutConfig{5, 5};
  c.train.batch_size = 16;
  c.train.updates_per_epoch = 500;
  c.train.epochs = 6;
  c.train.val_videos = 32;
  c.train.val_samples = 1;
  c.eval.rollout = RolloutConfig{5, 5};
  c.eval.num_videos = 100;
  return c;
}

/// 2-digit 64x64 clips with the full-size model: condition on 5 frames and
/// predict 10 in training, 20 at test time.
inline RunConfig paper_preset() {
  RunConfig c;
  c.preset = "smmnist-paper";
  c.data.generator = MovingMnistConfig{64, 2, 25, 28, 2.0, 4.0};
  c.data.num_clips = 20000;
  c.model = ModelConfig{};
  c.model.latent_pixel = 10;
  c.model.latent_flow = 10;
  c.train.rollout = RolloutConfig{5, 10};
  c.train.batch_size = 32;
  c.train.updates_per_epoch = 1000;
  c.train.epochs = 300;
  c.eval.rollout = RolloutConfig{5, 20};
  c.eval.num_videos = 0;
  return c;
}

inline std::vector<std::string> preset_names() { return {"smmnist-desk", "smmnist-paper"}; }

inline RunConfig preset(const std::string& name) {
  if (name == "smmnist-desk") return desk_preset();
  if (name == "smmnist-paper") return paper_preset();
  throw ConfigError("unknown preset '" + name + "' (expected smmnist-desk or smmnist-paper)");
}

namespace detail {

/// Rejects keys that the reference document does not have.
inline void check_keys(const nlohmann::json& doc, const nlohmann::json& ref, const std::string& where) {
  if (!doc.is_object() || !ref.is_object()) return;
  for (const auto& [k, v] : doc.items()) {
    const std::string path = where.empty() ? k : where + "." + k;
    if (!ref.contains(k)) throw ConfigError("unknown config key '" + path + "'");
    check_keys(v, ref.at(k), path);
  }
}

}  // namespace detail

/// Resolves a config document: preset (if named), then the document's keys.
/// A run manifest is accepted too; its recorded config is used.
inline RunConfig resolve_config(nlohmann::json doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (doc.value("schema", "") == std::string("slamp.manifest/1")) doc = doc.at("config");
  const std::string name = doc.value("preset", std::string("smmnist-desk"));
  RunConfig base = name.empty() ? RunConfig{} : preset(name);
  nlohmann::json merged = base;
  detail::check_keys(doc, merged, "");
  merged.merge_patch(doc);
  RunConfig out;
  try {
    out = merged.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  out.validate();
  return out;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return resolve_config(std::move(doc));
}

/// Default dataset directory: $SLAMP_DATA_ROOT/<preset>, else ./data/<preset>.
inline std::filesystem::path default_data_dir(const RunConfig& c) {
  const char* root = std::getenv(kDataRootEnv);
  const std::filesystem::path base = root && *root ? root : "data";
  return base / (c.preset.empty() ? "custom" : c.preset);
}

}  // namespace slamp::cli
