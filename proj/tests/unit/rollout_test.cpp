#include <gtest/gtest.h>

#include <limits>

#include "model_fixtures.hpp"
#include "slamp/rollout/rollout.hpp"

using namespace slamp;
using slamp::testing::random_video_batch;
using slamp::testing::tiny_config;

class RolloutTest : public ::testing::TestWithParam<Variant> {
 protected:
  ModelConfig cfg = tiny_config(GetParam());
  VideoModel<double> model{cfg, 21};
  std::mt19937_64 rng{22};
};

TEST_P(RolloutTest, TrainingStepsCoverEveryFrameAfterTheFirst) {
  auto video = random_video_batch<double>(3, 6, cfg, rng);
  NoiseSource noise(1, 3);
  auto r = train_rollout(model, video, RolloutConfig{2, 3}, noise);
  ASSERT_EQ(r.steps.size(), 4u);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    EXPECT_EQ(r.steps[i].target_index, static_cast<int>(i) + 1);
    EXPECT_TRUE(r.steps[i].from_posterior);
    EXPECT_TRUE(r.steps[i].posterior_pixel.defined());
    EXPECT_EQ(r.steps[i].combined.shape(), video.frames[0].shape());
    EXPECT_EQ(r.steps[i].flow.defined(), GetParam() != Variant::svg);
    EXPECT_EQ(r.steps[i].posterior_flow.defined(), GetParam() == Variant::slamp);
  }
  // Teacher forcing feeds ground truth.
  for (int t = 0; t < 5; ++t) EXPECT_EQ(r.inputs[static_cast<std::size_t>(t)], video.frames[static_cast<std::size_t>(t)]);
}

TEST_P(RolloutTest, GenerationNeverReadsBeyondConditioning) {
  auto video = random_video_batch<double>(2, 7, cfg, rng);
  // Poison the future: any read of these frames would surface as NaN.
  for (int t = 3; t < 7; ++t) video.frames[static_cast<std::size_t>(t)].fill(std::numeric_limits<double>::quiet_NaN());
  RolloutConfig rc{3, 4};
  GuardedFrames<double> frames(video, rc.cond_frames);
  NoiseSource noise(5, 2);
  auto g = generate(model, frames, rc, noise);
  EXPECT_EQ(frames.violations(), 0);
  ASSERT_EQ(g.predicted.size(), 4u);
  for (const auto& f : g.predicted)
    for (double v : f.values()) EXPECT_TRUE(std::isfinite(v));
  for (const auto& s : g.rollout.steps) EXPECT_EQ(s.from_posterior, s.target_index < rc.cond_frames);
  // Predictions are fed back after the conditioning window.
  EXPECT_EQ(g.rollout.inputs[4], g.rollout.steps[3].combined.value());
}

TEST_P(RolloutTest, SameNoiseSameSamples) {
  auto video = random_video_batch<double>(2, 5, cfg, rng);
  RolloutConfig rc{2, 3};
  NoiseSource n1(8, 2), n2(8, 2), n3(9, 2);
  auto a = generate(model, video, rc, n1), b = generate(model, video, rc, n2), c = generate(model, video, rc, n3);
  EXPECT_EQ(a.predicted.back(), b.predicted.back());
  EXPECT_NE(a.predicted.back(), c.predicted.back());
}

TEST_P(RolloutTest, BatchRowsAreIndependent) {
  // A row's samples depend only on its own data and noise stream.
  auto video = random_video_batch<double>(2, 5, cfg, rng);
  RolloutConfig rc{2, 3};
  NoiseSource both(std::vector<std::uint64_t>{41, 42});
  auto a = generate(model, video, rc, both);
  for (int r = 0; r < 2; ++r) {
    VideoBatch<double> single;
    for (const auto& f : video.frames) {
      Tensor<double> row(Shape{1, f.dim(1), f.dim(2), f.dim(3)});
      std::copy_n(f.data() + static_cast<std::size_t>(r) * row.size(), row.size(), row.data());
      single.frames.push_back(row);
    }
    NoiseSource one(std::vector<std::uint64_t>{41u + static_cast<std::uint64_t>(r)});
    auto b = generate(model, single, rc, one);
    const auto& fa = a.predicted.back();
    const auto& fb = b.predicted.back();
    for (std::size_t k = 0; k < fb.size(); ++k) EXPECT_NEAR(fa[r * fb.size() + k], fb[k], 1e-12) << "row " << r;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, RolloutTest, ::testing::Values(Variant::svg, Variant::baseline, Variant::slamp),
                         [](const auto& info) { return to_string(info.param); });

TEST(GuardedFrames, CountsAndRejectsReadsPastLimit) {
  std::mt19937_64 rng(1);
  auto video = random_video_batch<double>(1, 5, tiny_config(Variant::svg), rng);
  GuardedFrames<double> g(video, 2);
  EXPECT_NO_THROW(g[1]);
  EXPECT_THROW(g[2], FrameAccessViolation);
  EXPECT_THROW(g[4], FrameAccessViolation);
  EXPECT_EQ(g.violations(), 2);
}

TEST(Rollout, MaskOverrideSelectsStream) {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(2, 4, c, rng);
  for (double mask : {0.0, 1.0}) {
    RolloutConfig rc{2, 2, 1, mask};
    NoiseSource noise(1, 2);
    auto r = train_rollout(m, video, rc, noise);
    for (const auto& s : r.steps)
      EXPECT_EQ(s.combined.value(), mask == 1.0 ? s.appearance.value() : s.motion.value());
  }
}

TEST(Rollout, FeedMaskReplacesChosenRows) {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(2, 4, c, rng);
  FeedMask feed(4, std::vector<std::uint8_t>(2, 0));
  feed[2][1] = 1;
  NoiseSource noise(1, 2);
  auto r = train_rollout(m, video, RolloutConfig{2, 2}, noise, feed);
  const auto& in = r.inputs[2];
  const auto& truth = video.frames[2];
  const auto& gen = r.steps[1].combined.value();
  const std::size_t row = in.size() / 2;
  for (std::size_t k = 0; k < row; ++k) {
    EXPECT_EQ(in[k], truth[k]);
    EXPECT_EQ(in[row + k], gen[row + k]);
  }
}

TEST(RolloutConfig, Validation) {
  EXPECT_THROW(RolloutConfig({1, 3}).validate(Variant::slamp), ConfigError);
  EXPECT_NO_THROW(RolloutConfig({1, 3}).validate(Variant::svg));
  EXPECT_THROW(RolloutConfig({2, 0}).validate(Variant::svg), ConfigError);
  EXPECT_THROW(RolloutConfig({2, 2, 2}).validate(Variant::svg), ConfigError);
  EXPECT_THROW(RolloutConfig({2, 2, 1, 1.5}).validate(Variant::svg), ConfigError);
}

TEST(Rollout, ShortVideoRejected) {
  ModelConfig c = tiny_config(Variant::svg);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(1, 3, c, rng);
  NoiseSource noise(1, 1);
  EXPECT_THROW(train_rollout(m, video, RolloutConfig{2, 2}, noise), PreconditionError);
}

TEST(Rollout, FlowPriorSeesOnlyPastMotion) {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(1, 6, c, rng);
  auto sentinel = video;
  sentinel.frames[3].fill(0.5);  // change frame 3 only
  NoiseSource n1(1, 1), n2(1, 1);
  auto a = train_rollout(m, video, RolloutConfig{2, 4}, n1), b = train_rollout(m, sentinel, RolloutConfig{2, 4}, n2);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const int t = a.steps[i].target_index;
    // The prior for target t consumes motion up to frame t-1.
    const bool same = a.steps[i].prior_flow.mean.value() == b.steps[i].prior_flow.mean.value();
    EXPECT_EQ(same, t <= 3) << "target " << t;
  }
}

TEST(Rollout, FirstMotionStepUsesIdenticalPair) {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(2, 3, c, rng);
  NoiseSource noise(1, 2);
  auto r = train_rollout(m, video, RolloutConfig{2, 1}, noise);
  const Var<double> x0(video.frames[0]);
  auto [state, p] = m.prior_flow().step(m.prior_flow().zero_state(2), m.motion_encode(x0, x0).features);
  EXPECT_EQ(r.steps[0].prior_flow.mean.value(), p.mean.value());
}

TEST(Rollout, SameSeedBitIdentical) {
  ModelConfig c = tiny_config(Variant::slamp);
  VideoModel<double> m(c, 3);
  std::mt19937_64 rng(4);
  auto video = random_video_batch<double>(2, 4, c, rng);
  NoiseSource n1(5, 2), n2(5, 2);
  auto a = train_rollout(m, video, RolloutConfig{2, 2}, n1), b = train_rollout(m, video, RolloutConfig{2, 2}, n2);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].combined.value(), b.steps[i].combined.value());
    EXPECT_EQ(a.steps[i].latent_flow.value(), b.steps[i].latent_flow.value());
  }
}
