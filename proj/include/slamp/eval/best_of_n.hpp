#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "slamp/data/video.hpp"
#include "slamp/eval/metrics.hpp"
#include "slamp/random.hpp"
#include "slamp/rollout/rollout.hpp"

namespace slamp {

enum class Metric { psnr, ssim };

inline std::string to_string(Metric m) { return m == Metric::psnr ? "psnr" : "ssim"; }

/// Per-frame curve averaged over test videos with 95% half-widths.
struct MetricCurve {
  std::string metric;
  std::vector<double> mean, half_width;  // one entry per predicted frame
  double average = 0, average_half_width = 0;
};

/// Aggregates per-video curves ([video][frame]) into a MetricCurve.
inline MetricCurve aggregate_curves(const std::string& name, const std::vector<std::vector<double>>& per_video) {
  MetricCurve c;
  c.metric = name;
  if (per_video.empty()) return c;
  const std::size_t frames = per_video.front().size();
  std::vector<double> column(per_video.size()), averages(per_video.size());
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t v = 0; v < per_video.size(); ++v) column[v] = per_video[v].at(f);
    const auto m = mean_ci(column);
    c.mean.push_back(m.mean);
    c.half_width.push_back(m.half_width);
  }
  for (std::size_t v = 0; v < per_video.size(); ++v) {
    double s = 0;
    for (double x : per_video[v]) s += x;
    averages[v] = s / static_cast<double>(per_video[v].size());
  }
  const auto m = mean_ci(averages);
  c.average = m.mean;
  c.average_half_width = m.half_width;
  return c;
}

/// Index of the candidate with the highest frame-averaged score; ties keep the
/// earliest, so nested candidate sets give nondecreasing maxima.
inline int select_best(const std::vector<std::vector<double>>& candidates) {
  if (candidates.empty()) throw PreconditionError("select_best: no candidates");
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double s = 0;
    for (double x : candidates[i]) s += x;
    s /= static_cast<double>(candidates[i].size());
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

template <class T>
double frame_metric(Metric m, const Tensor<T>& pred, const Tensor<T>& truth) {
  return m == Metric::psnr ? psnr(pred, truth) : ssim(pred, truth);
}

/// Row `row` of a [B, C, H, W] tensor as [C, H, W].
template <class T>
Tensor<T> batch_row(const Tensor<T>& batch, int row) {
  Tensor<T> out(Shape{batch.dim(1), batch.dim(2), batch.dim(3)});
  std::copy_n(batch.data() + static_cast<std::size_t>(row) * out.size(), out.size(), out.data());
  return out;
}

/// Frame t of a clip as [C, H, W].
template <class T>
Tensor<T> clip_frame(const Video& v, int t) {
  Tensor<T> out(Shape{v.channels(), v.height(), v.width()});
  const float* src = v.frame_data(t);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<T>(src[k]);
  return out;
}

struct BestOfNConfig {
  int num_samples = 100;
  std::uint64_t seed = 0;
  RolloutConfig rollout;
  std::vector<Metric> metrics{Metric::psnr, Metric::ssim};
  int sample_batch = 20;  // samples generated per forward pass

  void validate() const {
    if (num_samples < 1) throw ConfigError("num_samples must be >= 1");
    if (sample_batch < 1) throw ConfigError("sample_batch must be >= 1");
    if (metrics.empty()) throw ConfigError("at least one metric is required");
  }
};

struct MetricResult {
  MetricCurve curve;
  std::vector<int> best_index;                      // per video
  std::vector<std::vector<double>> best_per_frame;  // [video][frame]
};

struct BestOfNResult {
  int num_videos = 0, num_samples = 0;
  std::uint64_t seed = 0;
  std::vector<MetricResult> metrics;

  const MetricResult& at(Metric m) const {
    for (const auto& r : metrics)
      if (r.curve.metric == to_string(m)) return r;
    throw PreconditionError("metric not evaluated: " + to_string(m));
  }
};

/// Noise seed of sample `sample` for test video `video`. Depends on nothing
/// else, so the first n samples are shared by every N >= n.
inline std::uint64_t sample_seed(std::uint64_t seed, std::size_t video, int sample) {
  return derive_seed(seed, static_cast<std::uint64_t>(video), static_cast<std::uint64_t>(sample));
}

/// scores[metric][sample][frame] for N stochastic futures of one clip.
template <class T>
std::vector<std::vector<std::vector<double>>> score_samples(const VideoModel<T>& model, const Video& clip,
                                                            std::size_t video_id, const BestOfNConfig& cfg) {
  const RolloutConfig& rc = cfg.rollout;
  if (clip.length() < rc.total_frames())
    throw PreconditionError("best_of_n_eval: clip has " + std::to_string(clip.length()) + " frames, need " +
                            std::to_string(rc.total_frames()));
  std::vector<Tensor<T>> truth;
  for (int t = rc.cond_frames; t < rc.total_frames(); ++t) truth.push_back(clip_frame<T>(clip, t));
  std::vector<std::vector<std::vector<double>>> scores(cfg.metrics.size());
  for (int start = 0; start < cfg.num_samples; start += cfg.sample_batch) {
    const int n = std::min(cfg.sample_batch, cfg.num_samples - start);
    const std::vector<const Video*> rows(static_cast<std::size_t>(n), &clip);
    const auto cond = make_batch<T>(rows, rc.cond_frames);
    std::vector<std::uint64_t> seeds;
    for (int j = 0; j < n; ++j) seeds.push_back(sample_seed(cfg.seed, video_id, start + j));
    NoiseSource noise(seeds);
    const auto g = generate(model, cond, rc, noise);
    for (int j = 0; j < n; ++j)
      for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
        std::vector<double> curve;
        for (std::size_t f = 0; f < truth.size(); ++f)
          curve.push_back(frame_metric(cfg.metrics[m], batch_row(g.predicted[f], j), truth[f]));
        scores[m].push_back(std::move(curve));
      }
  }
  return scores;
}

/// Best-of-N protocol: N futures per clip, each metric picks its own best
/// sample by frame-averaged score, curves are averaged over clips.
template <class T>
BestOfNResult best_of_n_eval(const VideoModel<T>& model, const std::vector<Video>& videos, const BestOfNConfig& cfg) {
  cfg.validate();
  cfg.rollout.validate(model.config().variant);
  if (videos.empty()) throw PreconditionError("best_of_n_eval: no videos");
  BestOfNResult r;
  r.num_videos = static_cast<int>(videos.size());
  r.num_samples = cfg.num_samples;
  r.seed = cfg.seed;
  r.metrics.resize(cfg.metrics.size());
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto scores = score_samples(model, videos[v], v, cfg);
    for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
      const int best = select_best(scores[m]);
      r.metrics[m].best_index.push_back(best);
      r.metrics[m].best_per_frame.push_back(scores[m][static_cast<std::size_t>(best)]);
    }
  }
  for (std::size_t m = 0; m < cfg.metrics.size(); ++m)
    r.metrics[m].curve = aggregate_curves(to_string(cfg.metrics[m]), r.metrics[m].best_per_frame);
  return r;
}

/// Reference predictor that repeats the last conditioning frame.
inline std::vector<MetricCurve> copy_last_baseline(const std::vector<Video>& videos, const RolloutConfig& rc,
                                                   const std::vector<Metric>& metrics) {
  std::vector<MetricCurve> out;
  for (Metric m : metrics) {
    std::vector<std::vector<double>> per_video;
    for (const auto& v : videos) {
      if (v.length() < rc.total_frames()) throw PreconditionError("copy_last_baseline: clip too short");
      const auto last = clip_frame<float>(v, rc.cond_frames - 1);
      std::vector<double> curve;
      for (int t = rc.cond_frames; t < rc.total_frames(); ++t) curve.push_back(frame_metric(m, last, clip_frame<float>(v, t)));
      per_video.push_back(std::move(curve));
    }
    out.push_back(aggregate_curves(to_string(m), per_video));
  }
  return out;
}

}  // namespace slamp
