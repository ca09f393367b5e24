// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset by number (e.g. `acceptance 1 2 9`); no arguments runs everything.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "model_fixtures.hpp"
#include "slamp/cli/commands.hpp"
#include "slamp/loss.hpp"
#include "slamp/warp.hpp"
#include "test_util.hpp"

using namespace slamp;
using slamp::testing::check_gradient;
using slamp::testing::random_tensor;
using slamp::testing::tiny_config;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

// 1 ---------------------------------------------------------------------------
Outcome warp_identity() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(4, 24), chans(1, 3);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const int b = chans(rng), c = chans(rng), h = dim(rng), w = dim(rng);
    Var<float> img(random_tensor({b, c, h, w}, rng).cast<float>());
    Var<float> zero(Tensor<float>(Shape{b, 2, h, w}));
    worst = std::max(worst, max_abs_diff(inverse_warp(img, zero).value(), img.value()));
  }
  return {worst <= 1e-6, fmt("max |warp(x, 0) - x| = %.3g over 100 images", worst)};
}

// 2 ---------------------------------------------------------------------------
Outcome integer_shift() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> dim(6, 20), shift(-3, 3);
  long checked = 0, mismatched = 0;
  for (int i = 0; i < 50; ++i) {
    const int h = dim(rng), w = dim(rng);
    Var<float> img(random_tensor({1, 2, h, w}, rng).cast<float>());
    // Integer displacement per pixel; the expected output is an array lookup.
    Tensor<float> flow(Shape{1, 2, h, w});
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        flow.at(0, 0, r, c) = static_cast<float>(shift(rng));
        flow.at(0, 1, r, c) = static_cast<float>(shift(rng));
      }
    const auto out = inverse_warp(img, Var<float>(flow)).value();
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const int sr = r + static_cast<int>(flow.at(0, 0, r, c)), sc = c + static_cast<int>(flow.at(0, 1, r, c));
        if (sr < 0 || sr >= h || sc < 0 || sc >= w) continue;  // interior only
        for (int ch = 0; ch < 2; ++ch) {
          ++checked;
          mismatched += out.at(0, ch, r, c) != img.value().at(0, ch, sr, sc);
        }
      }
  }
  return {mismatched == 0 && checked > 0, fmt("%ld of %ld interior pixels differ from the shifted array", mismatched, checked)};
}

// 3 ---------------------------------------------------------------------------
struct GradTally {
  int points = 0, entries = 0, failures = 0;
  double worst_rel = 0;
  void add(const std::vector<slamp::testing::GradCheck>& checks) {
    for (const auto& g : checks) {
      ++entries;
      if (!g.ok(1e-3, 1e-8)) ++failures;
      if (std::max(std::abs(g.analytic), std::abs(g.numeric)) > 1e-6) worst_rel = std::max(worst_rel, g.rel_error());
    }
  }
  std::string str(const char* name) const {
    return fmt("%s %d pts/%d entries, worst rel %.2g", name, points, entries, worst_rel);
  }
};

std::vector<std::size_t> all_entries(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Outcome gradient_checks() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> frac(0.15, 0.85), u(0, 1);
  GradTally bil, warp, comb, kl, elbo;
  constexpr int kPoints = 20;
  for (int p = 0; p < kPoints; ++p) {
    // Sample positions away from pixel centres and borders, where bilinear
    // interpolation is smooth.
    const int h = 5, w = 6;
    Var<double> img(random_tensor({1, 2, h, w}, rng), true);
    Tensor<double> coords(Shape{1, 2, 3, 3});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        coords.at(0, 0, i, j) = 1 + std::floor(u(rng) * (h - 3)) + frac(rng);
        coords.at(0, 1, i, j) = 1 + std::floor(u(rng) * (w - 3)) + frac(rng);
      }
    Var<double> cv(coords, true);
    auto f_bil = [&] { return sum(square(bilinear_sample(img, cv))); };
    bil.add(check_gradient(f_bil, img, all_entries(img.size())));
    bil.add(check_gradient(f_bil, cv, all_entries(cv.size())));
    ++bil.points;

    Var<double> src(random_tensor({1, 1, 5, 5}, rng), true);
    // Keep every sample point strictly inside the image and off the grid.
    Tensor<double> fl(Shape{1, 2, 5, 5});
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double tr = 1 + std::floor(u(rng) * 2) + frac(rng), tc = 1 + std::floor(u(rng) * 2) + frac(rng);
        fl.at(0, 0, i, j) = tr - i;
        fl.at(0, 1, i, j) = tc - j;
      }
    Var<double> fv(fl, true);
    auto f_warp = [&] { return sum(square(inverse_warp(src, fv))); };
    warp.add(check_gradient(f_warp, src, all_entries(src.size())));
    warp.add(check_gradient(f_warp, fv, all_entries(fv.size())));
    ++warp.points;

    Var<double> xa(random_tensor({2, 2, 3, 3}, rng), true), xm(random_tensor({2, 2, 3, 3}, rng), true);
    Var<double> mask(random_tensor({2, 1, 3, 3}, rng, 0.05, 0.95), true);
    auto f_comb = [&] { return sum(square(combine(xa, xm, mask))); };
    comb.add(check_gradient(f_comb, xa, all_entries(xa.size())));
    comb.add(check_gradient(f_comb, xm, all_entries(xm.size())));
    comb.add(check_gradient(f_comb, mask, all_entries(mask.size())));
    ++comb.points;

    GaussianParams<double> q{Var<double>(random_tensor({2, 4}, rng, -1, 1), true), Var<double>(random_tensor({2, 4}, rng, -1, 1), true)};
    GaussianParams<double> pp{Var<double>(random_tensor({2, 4}, rng, -1, 1), true), Var<double>(random_tensor({2, 4}, rng, -1, 1), true)};
    auto f_kl = [&] { return gaussian_kl(q, pp); };
    for (Var<double>* v : {&q.mean, &q.log_variance, &pp.mean, &pp.log_variance}) kl.add(check_gradient(f_kl, *v, all_entries(8)));
    ++kl.points;

    ModelConfig c = tiny_config(Variant::slamp);
    VideoModel<double> m(c, 400 + static_cast<std::uint64_t>(p));
    auto video = slamp::testing::random_video_batch<double>(2, 4, c, rng);
    auto f_elbo = [&] {
      NoiseSource noise(500 + static_cast<std::uint64_t>(p), 2);
      auto r = train_rollout(m, video, RolloutConfig{2, 2}, noise);
      auto targets = rollout_targets(r, video);
      return elbo_slamp(std::span<const StepOutput<double>>(r.steps), std::span<const Var<double>>(targets), 0.1).total;
    };
    std::uniform_int_distribution<std::size_t> pick(0, m.parameters().size() - 1);
    for (int k = 0; k < 5; ++k) {
      Var<double>& param = m.parameters().vars()[pick(rng)];
      elbo.add(check_gradient(f_elbo, param, slamp::testing::random_entries(param.size(), 1, rng)));
    }
    ++elbo.points;
  }
  const int failures = bil.failures + warp.failures + comb.failures + kl.failures + elbo.failures;
  return {failures == 0, fmt("%d failing entries; ", failures) + bil.str("bilinear") + "; " + warp.str("warp") + "; " +
                             comb.str("combine") + "; " + kl.str("kl") + "; " + elbo.str("elbo")};
}

// 4 ---------------------------------------------------------------------------
double log_normal_diag(const std::vector<double>& z, const std::vector<double>& mean, const std::vector<double>& logvar) {
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    s += -0.5 * (std::log(2 * std::numbers::pi) + logvar[i] + (z[i] - mean[i]) * (z[i] - mean[i]) / std::exp(logvar[i]));
  return s;
}

Outcome kl_oracle() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> n01(0, 1);
  std::uniform_real_distribution<double> lv(-1, 1);
  double worst = 0;
  bool self_zero = true;
  for (int pair = 0; pair < 20; ++pair) {
    std::vector<double> mq(8), lq(8), mp(8), lp(8);
    for (int i = 0; i < 8; ++i) {
      mq[i] = n01(rng);
      mp[i] = n01(rng);
      lq[i] = lv(rng);
      lp[i] = lv(rng);
    }
    auto as_var = [](const std::vector<double>& v) { return Var<double>(Tensor<double>(Shape{1, 8}, v)); };
    const GaussianParams<double> q{as_var(mq), as_var(lq)}, p{as_var(mp), as_var(lp)};
    const double analytic = gaussian_kl(q, p).item();
    self_zero &= gaussian_kl(q, q).item() == 0.0;
    double acc = 0;
    std::vector<double> z(8);
    constexpr int kSamples = 200000;
    for (int s = 0; s < kSamples; ++s) {
      for (int i = 0; i < 8; ++i) z[i] = mq[i] + std::exp(0.5 * lq[i]) * n01(rng);
      acc += log_normal_diag(z, mq, lq) - log_normal_diag(z, mp, lp);
    }
    const double mc = acc / kSamples;
    worst = std::max(worst, std::abs(analytic - mc) / analytic);
  }
  return {worst <= 0.01 && self_zero,
          fmt("worst relative gap %.4f over 20 pairs (200k samples); KL(q,q) %s 0", worst, self_zero ? "==" : "!=")};
}

// 5 ---------------------------------------------------------------------------
// Toy sequential latent model, z_t in R^4 for t = 1..3, z_0 = 0. Both the
// posterior and the prior are Gaussians whose mean and log-variance depend on
// the previous latent.
struct ToyStep {
  std::array<std::array<double, 4>, 4> a{};
  std::array<double, 4> b{}, c{}, d{};
  std::pair<std::vector<double>, std::vector<double>> params(const std::vector<double>& prev) const {
    std::vector<double> mean(4), logvar(4);
    for (int i = 0; i < 4; ++i) {
      mean[i] = b[i];
      for (int j = 0; j < 4; ++j) mean[i] += a[i][j] * prev[j];
      logvar[i] = c[i] + d[i] * std::tanh(prev[i]);
    }
    return {mean, logvar};
  }
};

ToyStep random_toy(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(-0.6, 0.6), lv(-0.8, 0.4);
  ToyStep s;
  for (auto& row : s.a)
    for (double& x : row) x = w(rng);
  for (int i = 0; i < 4; ++i) {
    s.b[i] = w(rng);
    s.c[i] = lv(rng);
    s.d[i] = w(rng);
  }
  return s;
}

Outcome elbo_time_decomposition() {
  std::mt19937_64 rng(505);
  constexpr int kSteps = 3, kSamples = 200000;
  std::vector<ToyStep> post, prior;
  for (int t = 0; t < kSteps; ++t) {
    post.push_back(random_toy(rng));
    prior.push_back(random_toy(rng));
  }
  std::normal_distribution<double> n01(0, 1);
  auto draw = [&](const std::vector<double>& mean, const std::vector<double>& logvar) {
    std::vector<double> z(4);
    for (int i = 0; i < 4; ++i) z[i] = mean[i] + std::exp(0.5 * logvar[i]) * n01(rng);
    return z;
  };
  // Sum over steps of the analytic per-step KL along posterior trajectories,
  // computed in batch with the library's KL.
  double per_step = 0;
  {
    Tensor<double> prev(Shape{kSamples, 4});
    for (int t = 0; t < kSteps; ++t) {
      Tensor<double> qm(Shape{kSamples, 4}), ql(Shape{kSamples, 4}), pm(Shape{kSamples, 4}), pl(Shape{kSamples, 4}),
          next(Shape{kSamples, 4});
      for (int s = 0; s < kSamples; ++s) {
        const std::vector<double> z(prev.data() + 4 * s, prev.data() + 4 * s + 4);
        const auto [m1, l1] = post[t].params(z);
        const auto [m2, l2] = prior[t].params(z);
        const auto zn = draw(m1, l1);
        for (int i = 0; i < 4; ++i) {
          qm[4 * s + i] = m1[i];
          ql[4 * s + i] = l1[i];
          pm[4 * s + i] = m2[i];
          pl[4 * s + i] = l2[i];
          next[4 * s + i] = zn[i];
        }
      }
      per_step += gaussian_kl(GaussianParams<double>{Var<double>(qm), Var<double>(ql)},
                              GaussianParams<double>{Var<double>(pm), Var<double>(pl)})
                      .item() /
                  kSamples;
      prev = next;
    }
  }
  // Monte Carlo KL of the joint sequence distributions, on fresh trajectories.
  double joint = 0;
  for (int s = 0; s < kSamples; ++s) {
    std::vector<double> prev(4, 0.0);
    double lq = 0, lp = 0;
    for (int t = 0; t < kSteps; ++t) {
      const auto [m1, l1] = post[t].params(prev);
      const auto [m2, l2] = prior[t].params(prev);
      const auto z = draw(m1, l1);
      lq += log_normal_diag(z, m1, l1);
      lp += log_normal_diag(z, m2, l2);
      prev = z;
    }
    joint += lq - lp;
  }
  joint /= kSamples;
  const double gap = std::abs(per_step - joint) / joint;
  return {gap <= 0.02, fmt("sum of per-step KL %.4f vs joint MC %.4f (relative gap %.4f)", per_step, joint, gap)};
}

// 6 ---------------------------------------------------------------------------
Outcome svg_reduction() {
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    ModelConfig c = tiny_config(Variant::baseline);
    c.recon = {1.0, 1.0, 0.0};
    VideoModel<double> m(c, 600 + static_cast<std::uint64_t>(trial));
    std::mt19937_64 rng(700 + static_cast<std::uint64_t>(trial));
    auto video = slamp::testing::random_video_batch<double>(3, 5, c, rng);
    RolloutConfig rc{2, 3};
    rc.mask_override = 1.0;
    NoiseSource noise(800 + static_cast<std::uint64_t>(trial), 3);
    auto r = train_rollout(m, video, rc, noise);
    auto targets = rollout_targets(r, video);
    const double beta = 0.37;
    const auto loss = elbo_baseline(std::span<const StepOutput<double>>(r.steps), std::span<const Var<double>>(targets),
                                    beta, c.recon);
    // Appearance-only objective from raw tensors: both image terms read the
    // appearance prediction; KL in closed form entry by entry.
    double recon = 0, kl = 0;
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const auto& xp = r.steps[i].appearance.value();
      const auto& x = targets[i].value();
      for (std::size_t k = 0; k < x.size(); ++k) recon += (xp[k] - x[k]) * (xp[k] - x[k]);
      const auto& q = r.steps[i].posterior_pixel;
      const auto& p = r.steps[i].prior_pixel;
      for (std::size_t k = 0; k < q.mean.size(); ++k) {
        const double lq = q.log_variance.value()[k], lp = p.log_variance.value()[k];
        const double dm = q.mean.value()[k] - p.mean.value()[k];
        kl += 0.5 * (lp - lq + (std::exp(lq) + dm * dm) / std::exp(lp) - 1);
      }
    }
    const double b = video.batch();
    const double expected = 2 * recon / b + beta * kl / b;
    worst = std::max(worst, std::abs(loss.total_value - expected) / std::max(1.0, std::abs(expected)));
  }
  return {worst <= 1e-6, fmt("max relative difference %.3g over 10 rollouts", worst)};
}

// 7 ---------------------------------------------------------------------------
Outcome combine_convexity() {
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> dim(1, 6);
  long outside = 0, endpoint_mismatch = 0, pixels = 0;
  for (int i = 0; i < 1000; ++i) {
    const int b = dim(rng), c = dim(rng) % 3 + 1, h = dim(rng), w = dim(rng);
    Var<float> xp(random_tensor({b, c, h, w}, rng, -2, 2).cast<float>());
    Var<float> xf(random_tensor({b, c, h, w}, rng, -2, 2).cast<float>());
    Var<float> mask(random_tensor({b, 1, h, w}, rng).cast<float>());
    const auto out = combine(xp, xf, mask).value();
    for (std::size_t k = 0; k < out.size(); ++k) {
      const float lo = std::min(xp.value()[k], xf.value()[k]), hi = std::max(xp.value()[k], xf.value()[k]);
      outside += out[k] < lo || out[k] > hi;
    }
    pixels += static_cast<long>(out.size());
    Var<float> zeros(Tensor<float>(Shape{b, 1, h, w}, 0.0f)), ones(Tensor<float>(Shape{b, 1, h, w}, 1.0f));
    endpoint_mismatch += !(combine(xp, xf, ones).value() == xp.value());
    endpoint_mismatch += !(combine(xp, xf, zeros).value() == xf.value());
  }
  return {outside == 0 && endpoint_mismatch == 0,
          fmt("%ld of %ld pixels outside [min, max]; %ld endpoint mismatches", outside, pixels, endpoint_mismatch)};
}

// 8 ---------------------------------------------------------------------------
Outcome best_of_n_monotone() {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<float> m(c, 808);
  std::mt19937_64 rng(809);
  std::vector<Video> videos;
  for (int v = 0; v < 6; ++v) {
    Video clip;
    clip.frames = random_tensor({5, 1, 8, 8}, rng).cast<float>();
    videos.push_back(std::move(clip));
  }
  std::vector<double> means;
  bool per_video = true;
  std::vector<std::vector<double>> prev;
  for (int n : {1, 5, 25, 100}) {
    BestOfNConfig e;
    e.num_samples = n;
    e.seed = 810;
    e.rollout = RolloutConfig{2, 3};
    e.metrics = {Metric::psnr};
    const auto r = best_of_n_eval(m, videos, e).at(Metric::psnr);
    means.push_back(r.curve.average);
    const auto& cur = r.best_per_frame;
    for (std::size_t v = 0; v < cur.size() && !prev.empty(); ++v) {
      double a = 0, b = 0;
      for (double x : prev[v]) a += x;
      for (double x : cur[v]) b += x;
      per_video &= b >= a;
    }
    prev = cur;
  }
  const bool mono = std::is_sorted(means.begin(), means.end());
  return {mono && per_video,
          fmt("mean best-of-N PSNR %.4f, %.4f, %.4f, %.4f for N = 1, 5, 25, 100", means[0], means[1], means[2], means[3])};
}

// 9 ---------------------------------------------------------------------------
Outcome desk_learning_signal() {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::RunConfig c = cli::preset("smmnist-desk");
  const auto splits = cli::generated_splits(c);
  std::vector<Video> val;
  for (std::size_t i = 0; i < std::min<std::size_t>(splits.val.size(), static_cast<std::size_t>(c.train.val_videos)); ++i)
    val.push_back(splits.val.get(i));
  VideoModel<float> model(c.model, cli::model_seed(c));
  Adam<float> opt(model.parameters(), c.train.optimizer);
  std::optional<Checkpoint> best;
  TrainEvents ev;
  ev.on_best = [&](std::int64_t step, double) { best = make_checkpoint<float>(model, nullptr, step); };
  const auto r = train_loop(model, opt, splits.train, val, c.train, ev);
  if (best) restore_checkpoint(*best, model);
  const double train_min = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60;

  std::vector<Video> test;
  for (std::size_t i = 0; i < std::min<std::size_t>(splits.test.size(), static_cast<std::size_t>(c.eval.num_videos)); ++i)
    test.push_back(splits.test.get(i));
  BestOfNConfig e;
  e.num_samples = 10;
  e.seed = c.eval.seed;
  e.rollout = c.eval.rollout;
  e.metrics = {Metric::psnr};
  e.sample_batch = 10;
  const double model_psnr = best_of_n_eval(model, test, e).at(Metric::psnr).curve.average;
  const double copy_psnr = copy_last_baseline(test, e.rollout, e.metrics)[0].average;
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60;
  const double gain = model_psnr - copy_psnr;
  const bool ok = gain >= 2.0 && r.step <= 5000 && minutes <= 30.0;
  return {ok, fmt("best-of-10 %.2f dB vs copy-last %.2f dB (%+.2f dB) on %zu clips after %lld updates "
                  "(best val at %lld); train %.1f min, total %.1f min",
                  model_psnr, copy_psnr, gain, test.size(), static_cast<long long>(r.step),
                  static_cast<long long>(r.best_step), train_min, minutes)};
}

// 10 --------------------------------------------------------------------------
Outcome sampling_decay() {
  const double k = 100;
  const bool start = scheduled_sampling_prob(0, k) == k / (k + 1);
  bool decreasing = true;
  for (std::int64_t i = 1; i <= 10 * static_cast<std::int64_t>(k); ++i)
    decreasing &= scheduled_sampling_prob(i, k) < scheduled_sampling_prob(i - 1, k);
  const double end = scheduled_sampling_prob(10 * static_cast<std::int64_t>(k), k);
  return {start && decreasing && end < 0.01,
          fmt("p(0) %s k/(k+1); strictly decreasing up to 10k: %s; p(10k) = %.3g", start ? "==" : "!=",
              decreasing ? "yes" : "no", end)};
}

// 11 --------------------------------------------------------------------------
Outcome checkpoint_round_trip() {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<float> a(c, 1111);
  Adam<float> opt(a.parameters(), AdamConfig{});
  std::mt19937_64 rng(1112);
  auto batch = slamp::testing::random_video_batch<float>(2, 4, c, rng);
  // A few updates so that the optimizer state is not trivial.
  for (int s = 0; s < 3; ++s) {
    NoiseSource noise(1113 + static_cast<std::uint64_t>(s), 2);
    a.parameters().zero_grad();
    backward(training_loss(a, batch, RolloutConfig{2, 2}, noise).total);
    opt.step();
  }
  const auto dir = std::filesystem::temp_directory_path() / ("slamp_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "round_trip.ckpt").string();
  save_checkpoint(path, make_checkpoint(a, &opt, 3));
  VideoModel<float> b(c, 9999);
  Adam<float> opt_b(b.parameters(), AdamConfig{});
  restore_checkpoint(load_checkpoint(path), b, &opt_b);
  std::filesystem::remove_all(dir);
  NoiseSource n1(1120, 2), n2(1120, 2);
  const double la = training_loss(a, batch, RolloutConfig{2, 2}, n1).total_value;
  const double lb = training_loss(b, batch, RolloutConfig{2, 2}, n2).total_value;

  std::vector<Video> clips;
  for (int v = 0; v < 3; ++v) {
    Video clip;
    clip.frames = random_tensor({4, 1, 8, 8}, rng).cast<float>();
    clips.push_back(std::move(clip));
  }
  BestOfNConfig e;
  e.num_samples = 4;
  e.seed = 1121;
  e.rollout = RolloutConfig{2, 2};
  e.metrics = {Metric::psnr};
  auto report = [&](const VideoModel<float>& m) {
    return metrics_report(best_of_n_eval(m, clips, e), copy_last_baseline(clips, e.rollout, e.metrics), e.rollout, "x").dump();
  };
  const std::string r1 = report(a), r2 = report(a), r3 = report(b);
  const bool same_report = r1 == r2 && r1 == r3;
  return {std::abs(la - lb) <= 1e-5 && same_report,
          fmt("loss %.6f before, %.6f after reload (|diff| %.2g); repeated reports %s", la, lb, std::abs(la - lb),
              same_report ? "identical" : "differ")};
}

// 12 --------------------------------------------------------------------------
Outcome access_guard() {
  long violations = 0, non_finite = 0;
  const Variant variants[] = {Variant::svg, Variant::baseline, Variant::slamp};
  std::mt19937_64 rng(1212);
  for (int i = 0; i < 100; ++i) {
    ModelConfig c = tiny_config(variants[i % 3]);
    VideoModel<float> m(c, 1300 + static_cast<std::uint64_t>(i));
    const int cond = 2 + i % 3, pred = 1 + i % 4;
    auto video = slamp::testing::random_video_batch<float>(2, cond + pred, c, rng);
    // Any read of a future frame would also surface as NaN in the output.
    for (int t = cond; t < cond + pred; ++t) video.frames[static_cast<std::size_t>(t)].fill(std::numeric_limits<float>::quiet_NaN());
    GuardedFrames<float> frames(video, cond);
    NoiseSource noise(1400 + static_cast<std::uint64_t>(i), 2);
    const auto g = generate(m, frames, RolloutConfig{cond, pred}, noise);
    violations += frames.violations();
    for (const auto& f : g.predicted)
      for (float v : f.values()) non_finite += !std::isfinite(v);
  }
  // The guard itself must trip on a forbidden read.
  ModelConfig c = tiny_config(Variant::slamp);
  auto video = slamp::testing::random_video_batch<float>(1, 4, c, rng);
  GuardedFrames<float> probe(video, 2);
  bool trips = false;
  try {
    (void)probe[2];
  } catch (const FrameAccessViolation&) {
    trips = true;
  }
  return {violations == 0 && non_finite == 0 && trips,
          fmt("%ld guard violations and %ld non-finite pixels over 100 rollouts; guard trips on the first unseen frame: %s",
              violations, non_finite, trips ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"warp identity", warp_identity},
      {"integer-shift warp", integer_shift},
      {"gradient checks", gradient_checks},
      {"KL oracle", kl_oracle},
      {"ELBO time decomposition", elbo_time_decomposition},
      {"SVG reduction", svg_reduction},
      {"fusion convexity", combine_convexity},
      {"best-of-N monotonicity", best_of_n_monotone},
      {"desk-scale learning signal", desk_learning_signal},
      {"scheduled sampling decay", sampling_decay},
      {"checkpoint round-trip", checkpoint_round_trip},
      {"access guard", access_guard},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d  %-28s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
