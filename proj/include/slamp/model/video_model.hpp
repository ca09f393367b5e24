#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "slamp/model/config.hpp"
#include "slamp/model/conv_nets.hpp"
#include "slamp/model/recurrent.hpp"
#include "slamp/warp.hpp"

namespace slamp {

/// All learnable components of the predictor for one ModelConfig.
///
/// Parameter names are prefixed by component (pixel_encoder, motion_encoder,
/// posterior_pixel, prior_pixel, predictor_pixel, posterior_flow, prior_flow,
/// predictor_flow, appearance_decoder, flow_decoder, mask), which is what the
/// checkpoint format keys on.
///
/// In the baseline variant the single latent stream lives in the *_pixel
/// heads and feeds all three decoders. Encoders are shared by the posterior
/// and prior heads of their stream.
template <class T>
class VideoModel {
 public:
  VideoModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const int g = cfg_.feature_dim, u = cfg_.rnn_units;
    pixel_encoder_ = ConvEncoder<T>(params_, "pixel_encoder", cfg_, cfg_.channels, rng);
    if (cfg_.has_motion_stream()) motion_encoder_ = ConvEncoder<T>(params_, "motion_encoder", cfg_, 2 * cfg_.channels, rng);

    posterior_pixel_ = GaussianHead<T>(params_, "posterior_pixel", g, cfg_.latent_pixel, u, cfg_.head_layers,
                                       cfg_.logvar_min, cfg_.logvar_max, rng);
    prior_pixel_ = GaussianHead<T>(params_, "prior_pixel", g, cfg_.latent_pixel, u, cfg_.head_layers, cfg_.logvar_min,
                                   cfg_.logvar_max, rng);
    predictor_pixel_ = Predictor<T>(params_, "predictor_pixel", g, cfg_.latent_pixel, u, cfg_.predictor_layers, rng);
    if (cfg_.has_motion_stream()) {
      posterior_flow_ = GaussianHead<T>(params_, "posterior_flow", g, cfg_.latent_flow, u, cfg_.head_layers,
                                        cfg_.logvar_min, cfg_.logvar_max, rng);
      prior_flow_ = GaussianHead<T>(params_, "prior_flow", g, cfg_.latent_flow, u, cfg_.head_layers, cfg_.logvar_min,
                                    cfg_.logvar_max, rng);
      predictor_flow_ = Predictor<T>(params_, "predictor_flow", g, cfg_.latent_flow, u, cfg_.predictor_layers, rng);
    }

    appearance_decoder_ =
        ConvDecoder<T>(params_, "appearance_decoder", cfg_, cfg_.channels, OutputActivation::sigmoid, 1.0, rng);
    if (cfg_.has_flow_decoder()) {
      flow_decoder_ =
          ConvDecoder<T>(params_, "flow_decoder", cfg_, 2, OutputActivation::bounded_tanh, cfg_.flow_bound(), rng);
      mask_ = MaskPredictor<T>(params_, "mask", cfg_, rng);
    }
  }

  VideoModel(const VideoModel&) = delete;
  VideoModel& operator=(const VideoModel&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterStore<T>& parameters() noexcept { return params_; }
  const ParameterStore<T>& parameters() const noexcept { return params_; }

  EncoderOutput<T> pixel_encode(const Var<T>& frame) const { return pixel_encoder_(frame); }

  /// Encodes the motion from `prev` to `cur`; the pair is stacked on channels.
  EncoderOutput<T> motion_encode(const Var<T>& prev, const Var<T>& cur) const {
    require_motion("motion_encode");
    if (prev.shape() != cur.shape())
      detail::shape_fail("motion_encode: " + shape_str(prev.shape()) + " vs " + shape_str(cur.shape()));
    return motion_encoder_(concat<T>({prev, cur}, 1));
  }

  RecurrentState<T> initial_state(int batch) const {
    RecurrentState<T> s;
    s.posterior_pixel = posterior_pixel_.zero_state(batch);
    s.prior_pixel = prior_pixel_.zero_state(batch);
    s.predictor_pixel = predictor_pixel_.zero_state(batch);
    if (cfg_.has_motion_stream()) {
      s.posterior_flow = posterior_flow_.zero_state(batch);
      s.prior_flow = prior_flow_.zero_state(batch);
      s.predictor_flow = predictor_flow_.zero_state(batch);
    }
    return s;
  }

  const GaussianHead<T>& posterior_pixel() const noexcept { return posterior_pixel_; }
  const GaussianHead<T>& prior_pixel() const noexcept { return prior_pixel_; }
  const Predictor<T>& predictor_pixel() const noexcept { return predictor_pixel_; }
  const GaussianHead<T>& posterior_flow() const { require_motion("posterior_flow"); return posterior_flow_; }
  const GaussianHead<T>& prior_flow() const { require_motion("prior_flow"); return prior_flow_; }
  const Predictor<T>& predictor_flow() const { require_motion("predictor_flow"); return predictor_flow_; }

  Var<T> appearance_decode(const Var<T>& g, const std::vector<Var<T>>& skips) const {
    return appearance_decoder_(g, skips);
  }
  Var<T> flow_decode(const Var<T>& g, const std::vector<Var<T>>& skips) const {
    detail::require(cfg_.has_flow_decoder(), "flow_decode: variant has no flow decoder");
    return flow_decoder_(g, skips);
  }
  Var<T> mask_predict(const Var<T>& appearance, const Var<T>& motion) const {
    detail::require(cfg_.has_flow_decoder(), "mask_predict: variant has no mask predictor");
    return mask_(appearance, motion);
  }

 private:
  void require_motion(const char* what) const {
    detail::require(cfg_.has_motion_stream(), std::string(what) + ": variant has no motion stream");
  }

  ModelConfig cfg_;
  ParameterStore<T> params_;
  ConvEncoder<T> pixel_encoder_, motion_encoder_;
  GaussianHead<T> posterior_pixel_, prior_pixel_, posterior_flow_, prior_flow_;
  Predictor<T> predictor_pixel_, predictor_flow_;
  ConvDecoder<T> appearance_decoder_, flow_decoder_;
  MaskPredictor<T> mask_;
};

}  // namespace slamp
