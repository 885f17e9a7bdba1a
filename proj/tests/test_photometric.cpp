#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "probfuse/photometric.hpp"
#include "probfuse/synthetic.hpp"
#include "test_support.hpp"

using namespace probfuse;
using probfuse::testing::error_code_of;

namespace {

GrayImage random_gray(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 255);
  GrayImage g(w, h);
  for (double& v : g.values()) v = u(rng);
  return g;
}

Intrinsics small_intrinsics(int w, int h) {
  Intrinsics k;
  k.fx = k.fy = 40;
  k.cx = (w - 1) / 2.0;
  k.cy = (h - 1) / 2.0;
  k.width = w;
  k.height = h;
  return k;
}

PhotoCostVolume single_pixel_costs(const std::vector<double>& costs) {
  PhotoCostVolume c(1, 1, make_binning(1, 4, static_cast<int>(costs.size())));
  for (std::size_t k = 0; k < costs.size(); ++k) {
    c.cost()[k] = costs[k];
    c.sample_count()[k] = 1;
  }
  return c;
}

}  // namespace

TEST(NormalizeImage, ConstantImageIsZero) {
  GrayImage g(5, 4, 77.0);
  {
    const auto out = normalize_image(g);
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
  }
  RgbImage c(3, 3, Rgb{10, 20, 30});
  {
    const auto out = normalize_image(c);
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(NormalizeImage, ZeroMeanUnitStd) {
  const auto n = normalize_image(random_gray(31, 17, 3));
  double mean = 0, sq = 0;
  for (double v : n.values()) mean += v;
  mean /= n.size();
  for (double v : n.values()) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(sq / n.size()), 1.0, 1e-6);
}

TEST(NormalizeImage, TwoLevelImage) {
  GrayImage g(4, 2, 0.0);
  for (int x = 0; x < 4; ++x) g(x, 1) = 255.0;
  const auto n = normalize_image(g);
  for (int x = 0; x < 4; ++x) {
    EXPECT_NEAR(n(x, 0), -1.0, 1e-12);
    EXPECT_NEAR(n(x, 1), 1.0, 1e-12);
  }
}

TEST(NormalizeImage, RgbUsesLuminance) {
  RgbImage c(2, 1);
  c(0, 0) = {255, 0, 0};
  c(1, 0) = {0, 0, 0};
  const auto n = normalize_image(c);
  EXPECT_NEAR(n(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(n(1, 0), -1.0, 1e-12);
}

TEST(AccumulateCost, SelfMatchIsZeroEverywhere) {
  const int w = 12, h = 10;
  const auto img = normalize_image(random_gray(w, h, 1));
  PhotoCostVolume c(w, h, default_binning());
  accumulate_cost(c, img, img, Pose::identity(), small_intrinsics(w, h));
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int k = 0; k < 64; ++k) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        EXPECT_NEAR(c.cost(i, k), 0.0, 1e-20);
        EXPECT_EQ(c.samples(i, k), 1);
      }
    }
  }
  // Border pixels have no full 3x3 patch.
  EXPECT_EQ(c.samples(0, 0), 0);
}

TEST(AccumulateCost, OutOfFrameLeavesVolumeUnchanged) {
  const int w = 12, h = 10;
  const auto img = normalize_image(random_gray(w, h, 2));
  PhotoCostVolume c(w, h, default_binning());
  c.cost()[5] = 3.0;
  c.sample_count()[5] = 2;
  const auto before = c;
  Pose away;
  away.translation = {1000.0, 0.0, 0.0};
  accumulate_cost(c, img, img, away, small_intrinsics(w, h));
  EXPECT_EQ(c.cost(), before.cost());
  EXPECT_EQ(c.sample_count(), before.sample_count());
}

TEST(AccumulateCost, StereoPairMinimisedAtPlaneDepth) {
  const auto binning = default_binning();
  const int target = binning.bin_of(2.0);
  synthetic::SceneOptions scene;
  scene.plane_depth = binning.midpoint(target);
  scene.plane_tilt = 0.0;
  scene.box_center = {0.0, 0.0, 50.0};  // hidden behind the plane
  const auto k = synthetic::default_intrinsics();
  Pose ref;
  ref.translation = {-0.2, 0.0, 0.0};  // camera moves 20 cm along +x
  const auto a = synthetic::render(scene, k, Pose::identity());
  const auto b = synthetic::render(scene, k, ref);
  PhotoCostVolume c(k.width, k.height, binning);
  accumulate_cost(c, normalize_image(a.rgb), normalize_image(b.rgb),
                  relative_pose(Pose::identity(), ref), k);
  for (auto [x, y] : {std::pair{128, 96}, std::pair{60, 50}, std::pair{190, 140}}) {
    const std::size_t i = static_cast<std::size_t>(y) * k.width + x;
    int best = -1;
    double best_cost = INFINITY;
    for (int bin = 0; bin < 64; ++bin) {
      if (c.samples(i, bin) == 0) continue;
      if (c.cost(i, bin) < best_cost) best_cost = c.cost(i, bin), best = bin;
    }
    EXPECT_EQ(best, target) << x << "," << y;
  }
}

TEST(AccumulateCost, DimensionMismatchThrows) {
  PhotoCostVolume c(4, 4, default_binning());
  EXPECT_EQ(error_code_of([&] {
              accumulate_cost(c, GrayImage(4, 4), GrayImage(5, 4), Pose::identity(),
                              small_intrinsics(4, 4));
            }),
            ErrorCode::kDimensionMismatch);
}

TEST(CostToProbability, ConstantCostIsUniform) {
  for (auto mode : {CostConversion::kShiftLinear, CostConversion::kSoftmax}) {
    const auto p = cost_to_probability(single_pixel_costs({2, 2, 2, 2}), {mode, 1.0});
    for (double v : p.ray(0)) EXPECT_NEAR(v, 0.25, 1e-15);
  }
}

TEST(CostToProbability, ShiftLinearTwoBins) {
  const auto p = cost_to_probability(single_pixel_costs({0, 1}));
  EXPECT_NEAR(p.ray(0)[0], 1.0, 1e-5);
  EXPECT_NEAR(p.ray(0)[1], 0.0, 1e-5);
  EXPECT_GT(p.ray(0)[1], 0.0);
}

TEST(CostToProbability, SoftmaxTwoBins) {
  const auto p = cost_to_probability(single_pixel_costs({0, 1}), {CostConversion::kSoftmax, 1.0});
  EXPECT_NEAR(p.ray(0)[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(p.ray(0)[0], 0.7311, 5e-5);
  EXPECT_NEAR(p.ray(0)[1], 0.2689, 5e-5);
}

TEST(CostToProbability, UsesMeanCostPerSample) {
  auto c = single_pixel_costs({0, 4});
  c.sample_count()[1] = 4;  // mean 1
  const auto p = cost_to_probability(c, {CostConversion::kSoftmax, 1.0});
  EXPECT_NEAR(p.ray(0)[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(CostToProbability, UnobservedRayIsUniform) {
  PhotoCostVolume c(2, 1, make_binning(1, 4, 4));
  const auto p = cost_to_probability(c);
  for (double v : p.data()) EXPECT_EQ(v, 0.25);
  EXPECT_TRUE(p.is_valid());
}

TEST(CostToProbability, RejectsNonPositiveTemperature) {
  EXPECT_EQ(error_code_of([] {
              cost_to_probability(single_pixel_costs({0, 1}), {CostConversion::kSoftmax, 0.0});
            }),
            ErrorCode::kInvalidRange);
}
