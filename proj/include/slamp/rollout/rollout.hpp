#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "slamp/data/video.hpp"
#include "slamp/model/skip_average.hpp"
#include "slamp/model/video_model.hpp"
#include "slamp/random.hpp"
#include "slamp/rollout/step_output.hpp"

namespace slamp {

struct RolloutConfig {
  int cond_frames = 5;
  int pred_frames = 10;
  /// 0-based index of the first predicted frame. Each frame is predicted
  /// from its predecessor, so this is fixed at 1 (the second frame).
  int first_pred_index = 1;
  /// Forces the fusion mask to a constant (1 = appearance only, 0 = motion only).
  std::optional<double> mask_override;

  int total_frames() const { return cond_frames + pred_frames; }

  void validate(Variant v) const {
    const int min_cond = v == Variant::slamp ? 2 : 1;
    if (cond_frames < min_cond)
      throw ConfigError("cond_frames must be >= " + std::to_string(min_cond) + " for variant " + to_string(v));
    if (pred_frames < 1) throw ConfigError("pred_frames must be >= 1");
    if (first_pred_index != 1) throw ConfigError("first_pred_index must be 1");
    if (mask_override && (*mask_override < 0.0 || *mask_override > 1.0))
      throw ConfigError("mask_override must lie in [0, 1]");
  }
};

/// Thrown when a rollout reads a frame it is not allowed to see.
struct FrameAccessViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Read-only view over a batch of frames that refuses (and counts) reads at
/// or beyond `readable` frames.
template <class T>
class GuardedFrames {
 public:
  GuardedFrames(const VideoBatch<T>& batch, int readable) : batch_(&batch), readable_(readable) {}

  const Tensor<T>& operator[](int t) {
    if (t >= readable_) {
      ++violations_;
      throw FrameAccessViolation("read of frame " + std::to_string(t) + " beyond the first " +
                                 std::to_string(readable_) + " frames");
    }
    if (t < 0 || t >= batch_->length()) throw PreconditionError("frame index out of range");
    return batch_->frames[static_cast<std::size_t>(t)];
  }

  int length() const { return batch_->length(); }
  int batch() const { return batch_->batch(); }
  int violations() const noexcept { return violations_; }

 private:
  const VideoBatch<T>* batch_;
  int readable_;
  int violations_ = 0;
};

/// feed[t][b] != 0 means frame t of sequence b is replaced by the model's own
/// prediction when used as the previous frame. Empty means teacher forcing.
using FeedMask = std::vector<std::vector<std::uint8_t>>;

namespace detail {

template <class T>
Tensor<T> mix_rows(const Tensor<T>& truth, const Tensor<T>& generated, const std::vector<std::uint8_t>& use_generated) {
  Tensor<T> out = truth;
  const std::size_t row = truth.size() / static_cast<std::size_t>(truth.dim(0));
  for (std::size_t b = 0; b < use_generated.size(); ++b)
    if (use_generated[b]) std::copy_n(generated.data() + b * row, row, out.data() + b * row);
  return out;
}

inline bool any_set(const FeedMask& feed, int t) {
  if (feed.empty()) return false;
  for (auto v : feed[static_cast<std::size_t>(t)])
    if (v) return true;
  return false;
}

/// Shared rollout engine. Steps predict frames 1 .. total-1. The posterior
/// is used while the target frame is readable (all steps in training, the
/// conditioning window in generation); afterwards latents come from the
/// learned priors and generated frames are fed back.
template <class T>
RolloutOutput<T> run_rollout(const VideoModel<T>& model, GuardedFrames<T>& frames, int total, int readable,
                             NoiseSource& noise, const FeedMask& feed, const RolloutConfig& rc) {
  const ModelConfig& cfg = model.config();
  const int b = frames.batch();
  if (noise.batch() != b) throw PreconditionError("noise source batch does not match video batch");
  if (!feed.empty()) {
    if (static_cast<int>(feed.size()) < total) throw PreconditionError("feed mask shorter than rollout");
    for (const auto& f : feed)
      if (static_cast<int>(f.size()) != b) throw PreconditionError("feed mask row count does not match batch");
  }
  const bool two_streams = cfg.has_motion_stream();
  const bool fused = cfg.has_flow_decoder();

  RecurrentState<T> st = model.initial_state(b);
  SkipRunningAverage<T> pixel_skips, motion_skips;
  RolloutOutput<T> out;
  out.inputs.push_back(frames[0]);

  // Encodings of the last step's target, reusable when that frame is fed
  // unchanged as the next input.
  std::optional<EncoderOutput<T>> cached_pixel, cached_motion;

  for (int t = 1; t < total; ++t) {
    StepOutput<T> s;
    s.target_index = t;
    s.from_posterior = t < readable;
    const Var<T> prev(out.inputs[static_cast<std::size_t>(t - 1)]);
    const bool prev_is_truth = t - 1 < readable && !any_set(feed, t - 1);

    const EncoderOutput<T> pix_in = (cached_pixel && prev_is_truth) ? *cached_pixel : model.pixel_encode(prev);
    pixel_skips.push(pix_in.skips);
    Var<T> target;
    cached_pixel.reset();
    if (s.from_posterior) {
      target = Var<T>(frames[t]);
      EncoderOutput<T> pix_tgt = model.pixel_encode(target);
      auto [post_state, q] = model.posterior_pixel().step(st.posterior_pixel, pix_tgt.features);
      st.posterior_pixel = std::move(post_state);
      s.posterior_pixel = q;
      cached_pixel = std::move(pix_tgt);
    }
    {
      auto [prior_state, p] = model.prior_pixel().step(st.prior_pixel, pix_in.features);
      st.prior_pixel = std::move(prior_state);
      s.prior_pixel = p;
    }
    const Tensor<T> noise_pixel = noise.template normal<T>(cfg.latent_pixel);
    s.latent_pixel = reparameterize(s.from_posterior ? s.posterior_pixel : s.prior_pixel, noise_pixel);
    Var<T> g_pixel;
    std::tie(st.predictor_pixel, g_pixel) = model.predictor_pixel().step(st.predictor_pixel, pix_in.features, s.latent_pixel);
    s.appearance = model.appearance_decode(g_pixel, pixel_skips.mean());

    if (two_streams) {
      // Motion into the previous frame; at the first step the pair is (prev, prev).
      const Var<T> prev2 = t >= 2 ? Var<T>(out.inputs[static_cast<std::size_t>(t - 2)]) : prev;
      const EncoderOutput<T> mot_in =
          (cached_motion && prev_is_truth) ? *cached_motion : model.motion_encode(prev2, prev);
      motion_skips.push(mot_in.skips);
      cached_motion.reset();
      if (s.from_posterior) {
        EncoderOutput<T> mot_tgt = model.motion_encode(prev, target);
        auto [post_state, q] = model.posterior_flow().step(st.posterior_flow, mot_tgt.features);
        st.posterior_flow = std::move(post_state);
        s.posterior_flow = q;
        cached_motion = std::move(mot_tgt);
      }
      auto [prior_state, p] = model.prior_flow().step(st.prior_flow, mot_in.features);
      st.prior_flow = std::move(prior_state);
      s.prior_flow = p;
      const Tensor<T> noise_flow = noise.template normal<T>(cfg.latent_flow);
      s.latent_flow = reparameterize(s.from_posterior ? s.posterior_flow : s.prior_flow, noise_flow);
      Var<T> g_flow;
      std::tie(st.predictor_flow, g_flow) = model.predictor_flow().step(st.predictor_flow, mot_in.features, s.latent_flow);
      s.flow = model.flow_decode(g_flow, motion_skips.mean());
    } else if (fused) {
      s.flow = model.flow_decode(g_pixel, pixel_skips.mean());
    }

    if (fused) {
      s.motion = inverse_warp(prev, s.flow);
      if (rc.mask_override) {
        Shape ms{b, 1, s.appearance.dim(2), s.appearance.dim(3)};
        s.mask = Var<T>(Tensor<T>(ms, static_cast<T>(*rc.mask_override)));
      } else {
        s.mask = model.mask_predict(s.appearance, s.motion);
      }
      s.combined = combine(s.appearance, s.motion, s.mask);
    } else {
      s.combined = s.appearance;
    }

    // Frame t as it will be seen by the next step.
    if (t < readable) {
      const Tensor<T>& truth = frames[t];
      out.inputs.push_back(any_set(feed, t) ? mix_rows(truth, s.combined.value(), feed[static_cast<std::size_t>(t)])
                                            : truth);
    } else {
      out.inputs.push_back(s.combined.value());
    }
    out.steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

/// Training rollout over the first cond+pred frames of `video`. All targets
/// are visible, so every latent is drawn from its posterior.
template <class T>
RolloutOutput<T> train_rollout(const VideoModel<T>& model, const VideoBatch<T>& video, const RolloutConfig& rc,
                               NoiseSource& noise, const FeedMask& use_generated = {}) {
  rc.validate(model.config().variant);
  const int total = rc.total_frames();
  if (video.length() < total)
    throw PreconditionError("train_rollout: video has " + std::to_string(video.length()) + " frames, needs " +
                            std::to_string(total));
  GuardedFrames<T> frames(video, total);
  return detail::run_rollout(model, frames, total, total, noise, use_generated, rc);
}

/// Ground-truth frames matching each step's target, for the loss.
template <class T>
std::vector<Var<T>> rollout_targets(const RolloutOutput<T>& r, const VideoBatch<T>& video) {
  std::vector<Var<T>> out;
  out.reserve(r.steps.size());
  for (const auto& s : r.steps) out.emplace_back(video.frames.at(static_cast<std::size_t>(s.target_index)));
  return out;
}

template <class T>
struct Generation {
  std::vector<Tensor<T>> predicted;  // pred_frames tensors [B, C, H, W]
  RolloutOutput<T> rollout;
};

/// Stochastic generation: posterior latents over the conditioning window,
/// learned-prior latents and fed-back predictions afterwards. Only frames
/// [0, cond_frames) of `frames` are ever read.
template <class T>
Generation<T> generate(const VideoModel<T>& model, GuardedFrames<T>& frames, const RolloutConfig& rc,
                       NoiseSource& noise) {
  rc.validate(model.config().variant);
  if (frames.length() < rc.cond_frames)
    throw PreconditionError("generate: need " + std::to_string(rc.cond_frames) + " conditioning frames");
  NoGradGuard no_grad;
  Generation<T> g;
  g.rollout = detail::run_rollout(model, frames, rc.total_frames(), rc.cond_frames, noise, {}, rc);
  for (const auto& s : g.rollout.steps)
    if (s.target_index >= rc.cond_frames) g.predicted.push_back(s.combined.value());
  return g;
}

template <class T>
Generation<T> generate(const VideoModel<T>& model, const VideoBatch<T>& conditioning, const RolloutConfig& rc,
                       NoiseSource& noise) {
  GuardedFrames<T> frames(conditioning, rc.cond_frames);
  return generate(model, frames, rc, noise);
}

}  // namespace slamp
