#include <gtest/gtest.h>

#include "slamp/warp.hpp"
#include "test_util.hpp"

using namespace slamp;
using slamp::testing::check_gradient;
using slamp::testing::random_entries;
using slamp::testing::random_tensor;

TEST(InverseWarp, ZeroFlowIsIdentity) {
  std::mt19937_64 rng(1);
  Var<float> img(random_tensor({3, 2, 9, 7}, rng, 0, 1).cast<float>());
  Var<float> flow(Tensor<float>({3, 2, 9, 7}));
  EXPECT_EQ(max_abs_diff(inverse_warp(img, flow).value(), img.value()), 0.0);
}

TEST(InverseWarp, IntegerShiftMatchesArrayShift) {
  std::mt19937_64 rng(2);
  Var<double> img(random_tensor({1, 1, 8, 8}, rng, 0, 1));
  const int dr = 2, dc = -1;
  Tensor<double> f({1, 2, 8, 8});
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      f.at(0, 0, i, j) = dr;
      f.at(0, 1, i, j) = dc;
    }
  const auto out = inverse_warp(img, Var<double>(f)).value();
  for (int i = 0; i + dr < 8; ++i)
    for (int j = -dc; j < 8; ++j) EXPECT_EQ(out.at(0, 0, i, j), img.value().at(0, 0, i + dr, j + dc));
}

TEST(InverseWarp, HalfPixelAverages) {
  Tensor<double> img({1, 1, 1, 2}, {0.2, 0.6});
  Tensor<double> f({1, 2, 1, 2}, {0, 0, 0.5, 0});
  EXPECT_NEAR(inverse_warp(Var<double>(img), Var<double>(f)).value()[0], 0.4, 1e-15);
}

TEST(InverseWarp, OutOfRangeClampsToBorder) {
  Tensor<double> img({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<double> f({1, 2, 2, 2}, {-5, -5, 5, 5, 0, 0, 0, 0});
  const auto out = inverse_warp(Var<double>(img), Var<double>(f)).value();
  EXPECT_EQ(out.to_vector(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(BilinearSample, IdentityGridReproducesImage) {
  std::mt19937_64 rng(3);
  Var<double> img(random_tensor({2, 3, 5, 6}, rng));
  Var<double> grid(identity_grid<double>(2, 5, 6));
  EXPECT_LT(max_abs_diff(bilinear_sample(img, grid).value(), img.value()), 1e-15);
}

TEST(InverseWarp, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  Var<double> img(random_tensor({2, 2, 6, 5}, rng, 0, 1), true);
  // Non-integer displacements keep the probe points off the kinks.
  Tensor<double> f = random_tensor({2, 2, 6, 5}, rng, -1.4, 1.4);
  for (auto& v : f.values())
    if (std::abs(v - std::round(v)) < 0.05) v += 0.1;
  Var<double> flow(f, true);
  Var<double> w(random_tensor({2, 2, 6, 5}, rng, -1, 1));
  auto fn = [&] { return sum(inverse_warp(img, flow) * w); };
  for (const auto& c : check_gradient(fn, img, random_entries(img.size(), 20, rng))) EXPECT_LT(c.rel_error(), 1e-6);
  for (const auto& c : check_gradient(fn, flow, random_entries(flow.size(), 20, rng), 1e-7))
    EXPECT_LT(c.rel_error(), 1e-5);
}

TEST(Combine, EndpointsAndGradients) {
  std::mt19937_64 rng(5);
  Var<double> a(random_tensor({2, 3, 4, 4}, rng), true);
  Var<double> m(random_tensor({2, 3, 4, 4}, rng), true);
  Var<double> ones(Tensor<double>({2, 1, 4, 4}, 1.0));
  Var<double> zeros(Tensor<double>({2, 1, 4, 4}, 0.0));
  EXPECT_EQ(combine(a, m, ones).value(), a.value());
  EXPECT_EQ(combine(a, m, zeros).value(), m.value());

  Var<double> mask(random_tensor({2, 1, 4, 4}, rng, 0.1, 0.9), true);
  Var<double> w(random_tensor({2, 3, 4, 4}, rng, -1, 1));
  auto fn = [&] { return sum(square(combine(a, m, mask) * w)); };
  for (Var<double>* v : {&a, &m, &mask})
    for (const auto& c : check_gradient(fn, *v, random_entries(v->size(), 10, rng))) EXPECT_LT(c.rel_error(), 1e-5);
}

TEST(Combine, RejectsMaskOutsideUnitInterval) {
  Var<double> a(Tensor<double>({1, 1, 2, 2}));
  Var<double> mask(Tensor<double>({1, 1, 2, 2}, 1.5));
  EXPECT_THROW(combine(a, a, mask), PreconditionError);
  EXPECT_THROW(combine(a, a, Var<double>(Tensor<double>({1, 2, 2, 2}))), ShapeError);
}

TEST(BilinearSample, OutputStaysWithinSourceRange) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Var<double> img(random_tensor({1, 2, 6, 6}, rng, -3, 3));
    Var<double> coords(random_tensor({1, 2, 9, 9}, rng, -4, 10));
    const auto [lo, hi] = std::minmax_element(img.value().values().begin(), img.value().values().end());
    for (double v : slamp::testing::values_of(bilinear_sample(img, coords))) {
      EXPECT_GE(v, *lo - 1e-12);
      EXPECT_LE(v, *hi + 1e-12);
    }
  }
}

TEST(Combine, ConvexMidpoint) {
  Var<double> a(Tensor<double>({1, 1, 2, 2}, 0.2)), b(Tensor<double>({1, 1, 2, 2}, 0.8));
  for (double v : slamp::testing::values_of(combine(a, b, Var<double>(Tensor<double>({1, 1, 2, 2}, 0.5))))) EXPECT_NEAR(v, 0.5, 1e-15);
}
