#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "probfuse/warp.hpp"
#include "test_support.hpp"

using namespace probfuse;
using namespace probfuse::testing;

namespace {

Intrinsics warp_intrinsics() {
  Intrinsics k;
  k.fx = k.fy = 20.0;
  k.cx = 7.5;
  k.cy = 5.5;
  k.width = 16;
  k.height = 12;
  return k;
}

std::vector<double> brute_occupancy(std::span<const double> p) {
  std::vector<double> occ(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    double before = 0.0;
    for (std::size_t j = 0; j < k; ++j) before += p[j];
    occ[k] = p[k] + 0.5 * before;
  }
  return occ;
}

int argmax(std::span<const double> r) {
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

}  // namespace

TEST(DepthToOccupancy, OneHot) {
  const auto occ = depth_to_occupancy(one_hot_volume(1, 1, default_binning(), 20));
  for (int k = 0; k < 64; ++k) EXPECT_EQ(occ.ray(0)[k], k < 20 ? 0.0 : (k == 20 ? 1.0 : 0.5));
}

TEST(DepthToOccupancy, UniformFourBins) {
  const auto occ = depth_to_occupancy(uniform_volume(1, 1, make_binning(0.5, 4, 4)));
  const double expected[] = {0.25, 0.375, 0.5, 0.625};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(occ.ray(0)[k], expected[k], 1e-12);
}

TEST(DepthToOccupancy, MatchesBruteForceAndStaysInUnitInterval) {
  std::mt19937_64 rng(51);
  const auto vol = random_volume(10, 10, default_binning(), rng);
  const auto occ = depth_to_occupancy(vol);
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    const auto want = brute_occupancy(vol.ray(i));
    for (int k = 0; k < 64; ++k) {
      EXPECT_NEAR(occ.ray(i)[k], want[k], 1e-12);
      EXPECT_GE(occ.ray(i)[k], 0.0);
      EXPECT_LE(occ.ray(i)[k], 1.0);
    }
  }
}

TEST(OccupancyToDepth, OneHotRoundTripIsExact) {
  const auto b = default_binning();
  for (int m : {0, 1, 31, 63}) {
    const auto vol = one_hot_volume(2, 2, b, m);
    const auto back = occupancy_to_depth(depth_to_occupancy(vol));
    for (std::size_t i = 0; i < vol.data().size(); ++i) EXPECT_EQ(back.data()[i], vol.data()[i]);
  }
}

TEST(OccupancyToDepth, ConstantOccupancyIsGeometric) {
  const auto b = default_binning();
  const OccupancyVolume occ(1, 1, b, 0.01);
  const auto vol = occupancy_to_depth(occ);
  const double total = 1.0 - std::pow(0.99, 64);
  for (int k = 0; k < 64; ++k) EXPECT_NEAR(vol.ray(0)[k], 0.01 * std::pow(0.99, k) / total, 1e-14);
  EXPECT_EQ(argmax(vol.ray(0)), 0);
  EXPECT_TRUE(vol.is_valid());
}

TEST(OccupancyToDepth, EmptyRayBecomesUniform) {
  const auto vol = occupancy_to_depth(OccupancyVolume(1, 1, make_binning(1, 2, 4), 0.0));
  for (double p : vol.ray(0)) EXPECT_EQ(p, 0.25);
}

TEST(WarpOccupancy, IdentityPoseIsIdentity) {
  std::mt19937_64 rng(53);
  const auto k = warp_intrinsics();
  const auto occ = depth_to_occupancy(random_volume(16, 12, default_binning(), rng));
  const auto warped = warp_occupancy(occ, Pose::identity(), k);
  for (std::size_t i = 0; i < occ.data().size(); ++i) {
    EXPECT_NEAR(warped.data()[i], occ.data()[i], 1e-9);
  }
}

TEST(WarpOccupancy, OutOfFrustumGivesDefault) {
  std::mt19937_64 rng(54);
  const auto k = warp_intrinsics();
  const auto occ = depth_to_occupancy(random_volume(16, 12, default_binning(), rng));
  Pose away;
  away.translation = {500.0, 0.0, 0.0};
  {
    const auto out = warp_occupancy(occ, away, k, 0.01);
    for (double v : out.data()) EXPECT_EQ(v, 0.01);
  }
  {
    const auto out = warp_occupancy(occ, away, k, 0.3);
    for (double v : out.data()) EXPECT_EQ(v, 0.3);
  }
}

TEST(WarpOccupancy, ForwardMotionMovesPlaneCloser) {
  const auto k = warp_intrinsics();
  const auto b = default_binning();
  const int m = b.bin_of(4.0);
  const double surface = b.midpoint(m);
  for (double tz : {0.1, 0.3, 0.6}) {
    Pose new_from_old;
    new_from_old.translation = {0.0, 0.0, -tz};
    const auto occ = warp_occupancy(depth_to_occupancy(one_hot_volume(16, 12, b, m)),
                                    new_from_old, k);
    const auto vol = occupancy_to_depth(occ);
    const int want = b.bin_of(surface - tz);
    for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
      EXPECT_LE(std::abs(argmax(vol.ray(i)) - want), 1) << tz << " " << i;
    }
  }
}

TEST(WarpOccupancy, Errors) {
  const auto occ = OccupancyVolume(4, 4, default_binning(), 0.1);
  EXPECT_EQ(error_code_of([&] { warp_occupancy(occ, Pose::identity(), warp_intrinsics()); }),
            ErrorCode::kDimensionMismatch);
  auto k = warp_intrinsics();
  k.width = k.height = 4;
  EXPECT_EQ(error_code_of([&] { warp_occupancy(occ, Pose::identity(), k, 1.5); }),
            ErrorCode::kOutOfRange);
}

TEST(PropagateKeyframe, OneHotOldUniformPriorKeepsOneHot) {
  const auto k = warp_intrinsics();
  const auto b = default_binning();
  const auto old = one_hot_volume(16, 12, b, 25);
  const auto out = propagate_keyframe(old, uniform_volume(16, 12, b), Pose::identity(), k);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    EXPECT_NEAR(out.data()[i], old.data()[i], 1e-12);
  }
}

TEST(PropagateKeyframe, UniformOldKeepsOneHotPrior) {
  const auto k = warp_intrinsics();
  const auto b = default_binning();
  std::mt19937_64 rng(56);
  std::uniform_int_distribution<int> bin(0, 63);
  ProbabilityVolume prior(16, 12, b);
  for (std::size_t i = 0; i < prior.pixel_count(); ++i) prior.ray(i)[bin(rng)] = 1.0;
  const auto out = propagate_keyframe(uniform_volume(16, 12, b), prior, Pose::identity(), k);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    EXPECT_EQ(argmax(out.ray(i)), argmax(prior.ray(i)));
  }
  EXPECT_TRUE(out.is_valid());
}

TEST(PropagateKeyframe, UniformOldPullsSmoothPriorForward) {
  // A uniform old volume warps to a front-weighted distribution, so a smooth
  // prior's peak can only move towards the camera.
  const auto k = warp_intrinsics();
  const auto b = default_binning();
  DepthMap gt(16, 12, 0.5);
  PriorModel model;
  const auto prior = synth_prior(gt, model, b);
  const auto out = propagate_keyframe(uniform_volume(16, 12, b), prior, Pose::identity(), k);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const int moved = argmax(prior.ray(i)) - argmax(out.ray(i));
    EXPECT_GE(moved, 0);
    EXPECT_LE(moved, 1);
  }
}

TEST(PropagateKeyframe, LayoutMismatchThrows) {
  const auto b = default_binning();
  EXPECT_EQ(error_code_of([&] {
              propagate_keyframe(uniform_volume(16, 12, b), uniform_volume(8, 12, b),
                                 Pose::identity(), warp_intrinsics());
            }),
            ErrorCode::kDimensionMismatch);
}
