#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "slamp/data/split.hpp"
#include "slamp/eval/best_of_n.hpp"
#include "slamp/loss.hpp"
#include "slamp/train/adam.hpp"
#include "slamp/train/schedule.hpp"

namespace slamp {

struct TrainConfig {
  RolloutConfig rollout;
  AdamConfig optimizer;
  int batch_size = 16;
  int epochs = 1;
  int updates_per_epoch = 1000;
  bool scheduled_sampling = false;
  double sampling_k = 3000.0;
  std::uint64_t seed = 0;
  int validate_every = 0;  // updates between validations; 0 means once per epoch
  int val_videos = 32;
  int val_samples = 1;
  int log_every = 10;

  std::int64_t total_updates() const { return static_cast<std::int64_t>(epochs) * updates_per_epoch; }
  int validation_interval() const { return validate_every > 0 ? validate_every : updates_per_epoch; }

  void validate(Variant v) const {
    rollout.validate(v);
    optimizer.validate();
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0 || updates_per_epoch < 1) throw ConfigError("epochs must be >= 0 and updates_per_epoch >= 1");
    if (scheduled_sampling && !(sampling_k > 0)) throw ConfigError("sampling_k must be positive");
    if (val_samples < 1) throw ConfigError("val_samples must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const RolloutConfig& r) {
  j = {{"cond_frames", r.cond_frames}, {"pred_frames", r.pred_frames}, {"first_pred_index", r.first_pred_index}};
}
inline void from_json(const nlohmann::json& j, RolloutConfig& r) {
  r.cond_frames = j.value("cond_frames", r.cond_frames);
  r.pred_frames = j.value("pred_frames", r.pred_frames);
  r.first_pred_index = j.value("first_pred_index", r.first_pred_index);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"rollout", c.rollout},
       {"optimizer", c.optimizer},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"updates_per_epoch", c.updates_per_epoch},
       {"scheduled_sampling", c.scheduled_sampling},
       {"sampling_k", c.sampling_k},
       {"seed", c.seed},
       {"validate_every", c.validate_every},
       {"val_videos", c.val_videos},
       {"val_samples", c.val_samples},
       {"log_every", c.log_every}};
}
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("rollout")) from_json(j.at("rollout"), c.rollout);
  if (j.contains("optimizer")) from_json(j.at("optimizer"), c.optimizer);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.updates_per_epoch = j.value("updates_per_epoch", c.updates_per_epoch);
  c.scheduled_sampling = j.value("scheduled_sampling", c.scheduled_sampling);
  c.sampling_k = j.value("sampling_k", c.sampling_k);
  c.seed = j.value("seed", c.seed);
  c.validate_every = j.value("validate_every", c.validate_every);
  c.val_videos = j.value("val_videos", c.val_videos);
  c.val_samples = j.value("val_samples", c.val_samples);
  c.log_every = j.value("log_every", c.log_every);
}

template <class T>
nlohmann::json loss_json(const LossBreakdown<T>& l) {
  return {{"loss", l.total_value},         {"recon_combined", l.recon_combined}, {"recon_appearance", l.recon_appearance},
          {"recon_motion", l.recon_motion}, {"kl_pixel", l.kl_pixel},             {"kl_flow", l.kl_flow},
          {"beta", l.beta}};
}

/// Raised when the loss or gradient stops being finite; carries the step and
/// loss terms for the diagnostic snapshot.
struct NonFiniteLoss : std::runtime_error {
  NonFiniteLoss(std::int64_t step_, nlohmann::json snapshot_)
      : std::runtime_error("non-finite loss at step " + std::to_string(step_)), step(step_), snapshot(std::move(snapshot_)) {}
  std::int64_t step;
  nlohmann::json snapshot;
};

/// ELBO of one training rollout (posterior latents, optional scheduled sampling).
template <class T>
LossBreakdown<T> training_loss(const VideoModel<T>& model, const VideoBatch<T>& batch, const RolloutConfig& rc,
                               NoiseSource& noise, const FeedMask& feed = {}) {
  const auto r = train_rollout(model, batch, rc, noise, feed);
  const auto targets = rollout_targets(r, batch);
  const ModelConfig& cfg = model.config();
  return elbo<T>(cfg.variant, r.steps, targets, cfg.beta, cfg.recon);
}

struct TrainEvents {
  std::function<void(const nlohmann::json&)> log;                     // one NDJSON record
  std::function<void(std::int64_t step, double val_psnr)> on_best;    // new best validation score
  std::function<void(std::int64_t step, double best_val)> on_checkpoint;  // periodic "last" snapshot
};

struct TrainResult {
  std::int64_t step = 0;
  double best_val_psnr = -std::numeric_limits<double>::infinity();
  std::int64_t best_step = -1;
  std::vector<double> losses;  // total loss of every update run in this call
};

/// Best-of-N PSNR of generated futures on validation clips.
template <class T>
double validation_psnr(const VideoModel<T>& model, const std::vector<Video>& val, const TrainConfig& cfg) {
  BestOfNConfig e;
  e.num_samples = cfg.val_samples;
  e.seed = derive_seed(cfg.seed, 0x7661);
  e.rollout = cfg.rollout;
  e.metrics = {Metric::psnr};
  return best_of_n_eval(model, val, e).at(Metric::psnr).curve.average;
}

/// Adam updates on the ELBO from `start_step` up to cfg.total_updates().
/// Batches, noise and feed masks are functions of (seed, step), so a resumed
/// run replays exactly what an uninterrupted one would have done.
template <class T>
TrainResult train_loop(VideoModel<T>& model, Adam<T>& opt, const SplitView& train, const std::vector<Video>& val,
                       const TrainConfig& cfg, const TrainEvents& events = {}, std::int64_t start_step = 0,
                       double best_val = -std::numeric_limits<double>::infinity()) {
  cfg.validate(model.config().variant);
  if (train.size() == 0) throw PreconditionError("train_loop: empty training split");
  auto it = train.batches(static_cast<std::size_t>(cfg.batch_size), derive_seed(cfg.seed, 0x6461));
  it.seek(static_cast<std::size_t>(start_step));
  std::vector<Video> val_clips(val.begin(), val.begin() + std::min<std::ptrdiff_t>(cfg.val_videos, std::ssize(val)));

  TrainResult res;
  res.best_val_psnr = best_val;
  res.step = start_step;
  const auto t0 = std::chrono::steady_clock::now();
  const int total_frames = cfg.rollout.total_frames();
  for (std::int64_t s = start_step; s < cfg.total_updates(); ++s) {
    const auto clips = it.next_cycling();
    std::vector<const Video*> ptrs;
    for (const auto& c : clips) ptrs.push_back(&c);
    const auto batch = make_batch<T>(ptrs, total_frames);
    NoiseSource noise(derive_seed(cfg.seed, static_cast<std::uint64_t>(s), 1), cfg.batch_size);
    double eps = 1.0;
    FeedMask feed;
    if (cfg.scheduled_sampling) {
      eps = scheduled_sampling_prob(s, cfg.sampling_k);
      feed = draw_feed_mask(total_frames, cfg.rollout.cond_frames, cfg.batch_size, eps,
                            derive_seed(cfg.seed, static_cast<std::uint64_t>(s), 2));
    }
    model.parameters().zero_grad();
    const auto loss = training_loss(model, batch, cfg.rollout, noise, feed);
    if (!std::isfinite(loss.total_value)) {
      auto snap = loss_json(loss);
      snap["step"] = s;
      throw NonFiniteLoss(s, snap);
    }
    backward(loss.total);
    const double grad_norm = opt.step();
    if (!std::isfinite(grad_norm)) {
      auto snap = loss_json(loss);
      snap["step"] = s;
      snap["grad_norm"] = "non-finite";
      throw NonFiniteLoss(s, snap);
    }
    res.losses.push_back(loss.total_value);
    res.step = s + 1;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (events.log && (res.step % cfg.log_every == 0 || res.step == 1)) {
      auto rec = loss_json(loss);
      rec["step"] = res.step;
      rec["epsilon"] = eps;
      rec["grad_norm"] = grad_norm;
      rec["wall_time"] = wall;
      events.log(rec);
    }
    const bool epoch_end = res.step % cfg.updates_per_epoch == 0;
    if (res.step % cfg.validation_interval() == 0 || res.step == cfg.total_updates()) {
      if (!val_clips.empty()) {
        const double v = validation_psnr(model, val_clips, cfg);
        const bool improved = v > res.best_val_psnr;
        if (improved) {
          res.best_val_psnr = v;
          res.best_step = res.step;
          if (events.on_best) events.on_best(res.step, v);
        }
        if (events.log)
          events.log({{"step", res.step}, {"val_psnr", v}, {"best", improved}, {"wall_time", wall}});
      }
    }
    if ((epoch_end || res.step == cfg.total_updates()) && events.on_checkpoint)
      events.on_checkpoint(res.step, res.best_val_psnr);
  }
  return res;
}

}  // namespace slamp
