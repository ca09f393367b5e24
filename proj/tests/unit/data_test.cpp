#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "slamp/data/container.hpp"
#include "slamp/data/split.hpp"

using namespace slamp;

namespace {

std::vector<std::uint8_t> idx_bytes(std::uint32_t magic, std::uint32_t n, std::uint32_t h, std::uint32_t w,
                                    const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> b;
  for (std::uint32_t v : {magic, n, h, w})
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

ImageSet solid_glyphs(int count, int size, float value) {
  ImageSet s{count, size, size, std::vector<float>(static_cast<std::size_t>(count) * size * size, value)};
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("slamp_data_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Idx, ParsesAndScalesBytes) {
  const auto s = parse_idx(idx_bytes(0x803, 1, 2, 2, {0, 255, 128, 0}));
  EXPECT_EQ(s.count, 1);
  EXPECT_EQ(s.height, 2);
  EXPECT_FLOAT_EQ(s.pixels[1], 1.0f);
  EXPECT_NEAR(s.pixels[2], 0.50196, 1e-5);
  EXPECT_EQ(s.pixels[3], 0.0f);
}

TEST(Idx, RejectsLabelMagicAndTruncation) {
  EXPECT_THROW(parse_idx(idx_bytes(0x801, 1, 2, 2, {0, 0, 0, 0})), FormatError);
  EXPECT_THROW(parse_idx(idx_bytes(0x803, 2, 28, 28, std::vector<std::uint8_t>(1567))), LengthError);
  EXPECT_EQ(parse_idx(idx_bytes(0x803, 2, 28, 28, std::vector<std::uint8_t>(1568))).count, 2);
}

TEST(Idx, SerializeRoundTrip) {
  std::mt19937_64 rng(1);
  ImageSet s{3, 5, 4, {}};
  for (int i = 0; i < 60; ++i) s.pixels.push_back(static_cast<float>(rng() % 256) / 255.0f);
  const auto back = parse_idx(serialize_idx(s));
  EXPECT_EQ(back.count, 3);
  EXPECT_EQ(back.width, 4);
  EXPECT_EQ(back.pixels, s.pixels);
}

TEST(Idx, LoadsFromDisk) {
  const auto dir = temp_dir("idx");
  std::filesystem::create_directories(dir);
  const auto bytes = idx_bytes(0x803, 1, 1, 2, {51, 255});
  binary::write_file((dir / "x.idx").string(), bytes);
  EXPECT_EQ(load_idx_file((dir / "x.idx").string()).pixels, (std::vector<float>{0.2f, 1.0f}));
}

TEST(StepDigit, LinearMotionAwayFromWalls) {
  Canvas c{64, 64, 8, 8, 1, 3};
  std::mt19937_64 rng(1);
  DigitState s{0, 10, 10, 2, 0};
  bool bounced = true;
  const auto n = step_digit(s, c, rng, &bounced);
  EXPECT_FALSE(bounced);
  EXPECT_EQ(n.row, 12);
  EXPECT_EQ(n.col, 10);
  EXPECT_EQ(n.d_row, 2);
  EXPECT_EQ(n.d_col, 0);
}

TEST(StepDigit, ReflectsAtRightWall) {
  Canvas c{32, 32, 8, 8, 1, 2};
  const double bound = c.max_col();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto n = step_digit(DigitState{0, 10, bound - 1, 0, 3}, c, rng);
    EXPECT_DOUBLE_EQ(n.col, 2 * bound - (bound + 2));
    EXPECT_DOUBLE_EQ(n.col, bound - 2);
    EXPECT_LT(n.d_col, 0);
    const double speed = std::hypot(n.d_row, n.d_col);
    EXPECT_GE(speed, 1);
    EXPECT_LE(speed, 2);
  }
}

TEST(StepDigit, ZeroVelocityIsFixedPoint) {
  Canvas c{32, 32, 8, 8, 1, 2};
  std::mt19937_64 rng(1);
  DigitState s{0, 3.5, 7.25, 0, 0};
  for (int i = 0; i < 100; ++i) s = step_digit(s, c, rng);
  EXPECT_EQ(s.row, 3.5);
  EXPECT_EQ(s.col, 7.25);
}

TEST(StepDigit, GlyphLargerThanCanvasIsConfigError) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(step_digit(DigitState{}, Canvas{16, 16, 20, 20, 1, 2}, rng), ConfigError);
}

TEST(StepDigit, StaysInsideUnderRandomWalks) {
  Canvas c{32, 32, 16, 16, 1, 6};
  std::mt19937_64 rng(3);
  DigitState s{0, 5, 5, 4, -5};
  for (int i = 0; i < 5000; ++i) {
    s = step_digit(s, c, rng);
    ASSERT_GE(s.row, 0);
    ASSERT_LE(s.row, c.max_row());
    ASSERT_GE(s.col, 0);
    ASSERT_LE(s.col, c.max_col());
  }
}

TEST(MovingMnist, StaticDigitGivesIdenticalFrames) {
  MovingMnistConfig cfg;
  cfg.length = 5;
  cfg.speed_min = cfg.speed_max = 0;
  const auto v = generate_moving_mnist(cfg, procedural_digits(10, 1), 4);
  const std::size_t fs = v.frame_size();
  for (int t = 1; t < 5; ++t) EXPECT_TRUE(std::equal(v.frame_data(0), v.frame_data(0) + fs, v.frame_data(t)));
}

TEST(MovingMnist, DeterministicInSeed) {
  MovingMnistConfig cfg;
  cfg.num_digits = 2;
  const auto digits = procedural_digits(20, 1);
  const auto a = generate_moving_mnist(cfg, digits, 9), b = generate_moving_mnist(cfg, digits, 9),
             c = generate_moving_mnist(cfg, digits, 10);
  EXPECT_EQ(a.frames.to_vector(), b.frames.to_vector());
  EXPECT_NE(a.frames.to_vector(), c.frames.to_vector());
  EXPECT_EQ(a.config_hash, cfg.hash());
}

TEST(MovingMnist, OverlapTakesMaximum) {
  MovingMnistConfig cfg;
  cfg.canvas = 8;
  cfg.digit_size = 8;  // glyph fills the canvas, so both digits cover every pixel
  cfg.num_digits = 2;
  cfg.length = 2;
  ImageSet digits{2, 8, 8, {}};
  digits.pixels.assign(64, 0.8f);
  digits.pixels.resize(128, 0.6f);
  const auto v = generate_moving_mnist(cfg, digits, 1);
  for (float x : v.frames.values()) EXPECT_TRUE(x == 0.8f || x == 0.6f);
  // With both glyphs drawn, max blending can only yield 0.6 when glyph 1 is chosen twice.
  Trajectory tr;
  generate_moving_mnist(cfg, digits, 1, &tr);
  const bool any_bright = tr.states[0][0].glyph_index == 0 || tr.states[0][1].glyph_index == 0;
  EXPECT_EQ(v.frames[0], any_bright ? 0.8f : 0.6f);
}

TEST(MovingMnist, IntensitiesInRangeAndMotionPiecewiseAffine) {
  MovingMnistConfig cfg;
  cfg.length = 40;
  cfg.num_digits = 2;
  const auto digits = procedural_digits(30, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Trajectory tr;
    const auto v = generate_moving_mnist(cfg, digits, seed, &tr);
    for (float x : v.frames.values()) ASSERT_TRUE(x >= 0.0f && x <= 1.0f);
    for (std::size_t d = 0; d < 2; ++d) {
      // Between bounces, second differences vanish.
      for (int t = 2; t < cfg.length; ++t) {
        if (tr.bounced[t][d] || tr.bounced[t - 1][d]) continue;
        const auto &a = tr.states[t - 2][d], &b = tr.states[t - 1][d], &c = tr.states[t][d];
        EXPECT_NEAR(c.row - 2 * b.row + a.row, 0.0, 1e-12);
        EXPECT_NEAR(c.col - 2 * b.col + a.col, 0.0, 1e-12);
      }
    }
  }
}

TEST(MovingMnist, RejectsBadConfig) {
  MovingMnistConfig cfg;
  cfg.num_digits = 3;
  EXPECT_THROW(generate_moving_mnist(cfg, procedural_digits(10, 1), 1), ConfigError);
  cfg.num_digits = 1;
  cfg.digit_size = 40;
  EXPECT_THROW(generate_moving_mnist(cfg, procedural_digits(10, 1), 1), ConfigError);
}

TEST(Glyphs, ProceduralDigitsAreInkedAndDistinct) {
  const auto d = procedural_digits(20, 3);
  EXPECT_EQ(d.height, 28);
  for (int i = 0; i < 20; ++i) {
    float ink = 0;
    for (std::size_t k = 0; k < d.image_size(); ++k) ink += d.image(i)[k];
    EXPECT_GT(ink, 20.0f);
    EXPECT_EQ(d.image(i)[0], 0.0f);  // corners stay background
  }
  EXPECT_FALSE(std::equal(d.image(0), d.image(0) + d.image_size(), d.image(10)));
}

TEST(Glyphs, ResizePreservesConstantImages) {
  const auto s = solid_glyphs(1, 28, 0.5f);
  for (int size : {7, 16, 28, 40})
    for (float v : resize_image(s.image(0), 28, 28, size)) EXPECT_NEAR(v, 0.5f, 1e-6);
}

TEST(Split, SizesAndDisjointness) {
  auto src = std::make_shared<GeneratedSource>(MovingMnistConfig{}, std::make_shared<ImageSet>(procedural_digits(10, 1)),
                                               5, 10);
  const auto s = dataset_split(src, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  std::set<std::size_t> all;
  for (const auto* v : {&s.train, &s.val, &s.test}) all.insert(v->indices().begin(), v->indices().end());
  EXPECT_EQ(all.size(), 10u);
  const auto again = dataset_split(src, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(again.train.indices(), s.train.indices());
  EXPECT_EQ(s.test.get(0).frames.to_vector(), src->get(s.test.indices()[0]).frames.to_vector());
}

TEST(Split, RejectsBadRatiosAndEmptySplits) {
  std::vector<Video> v(10);
  EXPECT_THROW(dataset_split(v, {0.5, 0.5, 0.5}, 1), ConfigError);
  EXPECT_THROW(dataset_split(v, {1.0, 0.0, 0.0}, 1), ConfigError);
  EXPECT_THROW(dataset_split(std::vector<Video>(3), {0.9, 0.05, 0.05}, 1), ConfigError);
}

TEST(Split, BatchIteratorYieldsFixedSizeBatchesPerEpoch) {
  auto src = std::make_shared<GeneratedSource>(MovingMnistConfig{}, std::make_shared<ImageSet>(procedural_digits(10, 1)),
                                               5, 23);
  const auto s = dataset_split(src, {0.6, 0.2, 0.2}, 3);
  ASSERT_EQ(s.train.size(), 13u);
  auto it = s.train.batches(4, 7);
  std::vector<Video> b;
  int n = 0;
  while (it.next(b)) {
    EXPECT_EQ(b.size(), 4u);
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_EQ(it.epoch(), 1u);
  EXPECT_THROW(s.val.batches(10, 1), ConfigError);
}

TEST(Container, F32AndPngRoundTrip) {
  MovingMnistConfig cfg;
  cfg.length = 4;
  const auto digits = procedural_digits(10, 1);
  std::vector<Video> clips;
  for (std::uint64_t i = 0; i < 3; ++i) clips.push_back(generate_moving_mnist(cfg, digits, i));

  const auto f32 = temp_dir("f32");
  write_dataset(f32, clips, 11, ClipEncoding::f32, cfg);
  const auto back = read_dataset(f32);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].frames.to_vector(), clips[i].frames.to_vector());
    EXPECT_EQ(back[i].seed, clips[i].seed);
  }
  EXPECT_EQ(read_dataset_header(f32).seed, 11u);

  const auto png = temp_dir("png");
  write_dataset(png, clips, 11, ClipEncoding::png, cfg);
  const auto pback = read_dataset(png);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < clips[i].frames.size(); ++k)
      EXPECT_NEAR(pback[i].frames[k], clips[i].frames[k], 0.5 / 255.0 + 1e-6);
}

TEST(Container, TruncatedClipIsLengthError) {
  MovingMnistConfig cfg;
  cfg.length = 2;
  const auto dir = temp_dir("trunc");
  write_dataset(dir, {generate_moving_mnist(cfg, procedural_digits(10, 1), 1)}, 1, ClipEncoding::f32);
  std::filesystem::resize_file(dir / "clip_000000.f32", 100);
  EXPECT_THROW(read_dataset(dir), LengthError);
}
