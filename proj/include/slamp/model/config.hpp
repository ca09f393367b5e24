#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "slamp/errors.hpp"

namespace slamp {

/// svg: appearance decoder only. baseline: one latent stream feeding
/// appearance, flow and mask decoders. slamp: separate pixel and flow streams.
enum class Variant { svg, baseline, slamp };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::svg: return "svg";
    case Variant::baseline: return "baseline";
    case Variant::slamp: return "slamp";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "svg") return Variant::svg;
  if (s == "baseline") return Variant::baseline;
  if (s == "slamp") return Variant::slamp;
  throw ConfigError("unknown variant '" + s + "' (expected svg, baseline or slamp)");
}

/// Relative weights of the three reconstruction terms.
struct ReconWeights {
  double combined = 1.0;
  double appearance = 1.0;
  double motion = 1.0;
};

struct ModelConfig {
  Variant variant = Variant::slamp;
  int image_size = 64;
  int channels = 1;
  int feature_dim = 128;
  int latent_pixel = 20;
  int latent_flow = 20;
  int rnn_units = 256;
  int head_layers = 1;
  int predictor_layers = 2;
  std::vector<int> encoder_channels{64, 128, 256, 512};
  int mask_width = 64;
  int se_reduction = 4;
  /// Flow magnitude bound in pixels; 0 means half the image width.
  double max_flow = 0.0;
  double logvar_min = -10.0;
  double logvar_max = 10.0;
  double beta = 1e-4;
  ReconWeights recon;
  /// Fixed likelihood variance is folded into beta.
  std::string likelihood = "fixed-variance-l2";

  bool has_motion_stream() const { return variant == Variant::slamp; }
  bool has_flow_decoder() const { return variant != Variant::svg; }
  double flow_bound() const { return max_flow > 0.0 ? max_flow : 0.5 * image_size; }
  /// Spatial size after the last encoder stage.
  int bottleneck_size() const { return image_size >> encoder_channels.size(); }

  void validate() const {
    auto positive = [](int v, const char* what) {
      if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(image_size, "image_size");
    positive(channels, "channels");
    positive(feature_dim, "feature_dim");
    positive(latent_pixel, "latent_pixel");
    positive(latent_flow, "latent_flow");
    positive(rnn_units, "rnn_units");
    positive(head_layers, "head_layers");
    positive(predictor_layers, "predictor_layers");
    positive(mask_width, "mask_width");
    positive(se_reduction, "se_reduction");
    if (encoder_channels.empty()) throw ConfigError("encoder_channels must not be empty");
    for (int c : encoder_channels) positive(c, "encoder channel");
    if (bottleneck_size() < 1 || (bottleneck_size() << encoder_channels.size()) != image_size)
      throw ConfigError("image_size must be divisible by 2^(number of encoder stages)");
    if (!(logvar_min < logvar_max)) throw ConfigError("logvar_min must be below logvar_max");
    if (max_flow < 0.0) throw ConfigError("max_flow must be >= 0");
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const ReconWeights& w) {
  j = {{"combined", w.combined}, {"appearance", w.appearance}, {"motion", w.motion}};
}
inline void from_json(const nlohmann::json& j, ReconWeights& w) {
  w.combined = j.value("combined", w.combined);
  w.appearance = j.value("appearance", w.appearance);
  w.motion = j.value("motion", w.motion);
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"variant", to_string(c.variant)},
       {"image_size", c.image_size},
       {"channels", c.channels},
       {"feature_dim", c.feature_dim},
       {"latent_pixel", c.latent_pixel},
       {"latent_flow", c.latent_flow},
       {"rnn_units", c.rnn_units},
       {"head_layers", c.head_layers},
       {"predictor_layers", c.predictor_layers},
       {"encoder_channels", c.encoder_channels},
       {"mask_width", c.mask_width},
       {"se_reduction", c.se_reduction},
       {"max_flow", c.max_flow},
       {"logvar_min", c.logvar_min},
       {"logvar_max", c.logvar_max},
       {"beta", c.beta},
       {"recon", c.recon},
       {"likelihood", c.likelihood}};
}

/// Missing keys keep their current values, so a preset can be overlaid.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.latent_pixel = j.value("latent_pixel", c.latent_pixel);
  c.latent_flow = j.value("latent_flow", c.latent_flow);
  c.rnn_units = j.value("rnn_units", c.rnn_units);
  c.head_layers = j.value("head_layers", c.head_layers);
  c.predictor_layers = j.value("predictor_layers", c.predictor_layers);
  c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
  c.mask_width = j.value("mask_width", c.mask_width);
  c.se_reduction = j.value("se_reduction", c.se_reduction);
  c.max_flow = j.value("max_flow", c.max_flow);
  c.logvar_min = j.value("logvar_min", c.logvar_min);
  c.logvar_max = j.value("logvar_max", c.logvar_max);
  c.beta = j.value("beta", c.beta);
  if (j.contains("recon")) from_json(j.at("recon"), c.recon);
  c.likelihood = j.value("likelihood", c.likelihood);
}

}  // namespace slamp
