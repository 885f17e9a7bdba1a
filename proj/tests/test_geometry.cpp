#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "probfuse/error.hpp"
#include "probfuse/geometry.hpp"
#include "test_support.hpp"

using namespace probfuse;
using probfuse::testing::error_code_of;

namespace {

Intrinsics test_intrinsics() {
  Intrinsics k;
  k.fx = 100;
  k.fy = 100;
  k.cx = 128;
  k.cy = 96;
  k.width = 256;
  k.height = 192;
  return k;
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  axis.normalize();
  Pose p;
  p.rotation = Eigen::AngleAxisd(u(rng) * 3.0, axis).toRotationMatrix();
  p.translation = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

}  // namespace

TEST(Binning, MidpointsAreGeometricMeansOfBinEdges) {
  const auto b = make_binning(0.1, 12.0, 64);
  // Bin edges form a geometric progression with ratio (12/0.1)^(1/64).
  const double ratio = std::pow(12.0 / 0.1, 1.0 / 64.0);
  for (int k = 0; k < 64; ++k) {
    const double lo = 0.1 * std::pow(ratio, k);
    const double hi = lo * ratio;
    EXPECT_NEAR(b.midpoint(k), std::sqrt(lo * hi), 1e-12 * hi) << k;
  }
  EXPECT_NEAR(b.midpoint(0), 0.10381, 5e-6);
  EXPECT_NEAR(b.midpoint(63), 11.559, 5e-4);
}

TEST(Binning, MidpointsStrictlyIncreaseInsideRange) {
  const auto b = default_binning();
  EXPECT_GT(b.midpoint(0), b.d_min());
  EXPECT_LT(b.midpoint(63), b.d_max());
  for (int k = 1; k < b.k_count(); ++k) EXPECT_GT(b.midpoint(k), b.midpoint(k - 1));
}

TEST(Binning, BinOfMidpointIsItsOwnBin) {
  const auto b = default_binning();
  for (int k = 0; k < b.k_count(); ++k) EXPECT_EQ(b.bin_of(b.midpoint(k)), k);
  EXPECT_EQ(b.bin_of(0.01), 0);
  EXPECT_EQ(b.bin_of(100.0), 63);
}

TEST(Binning, RejectsBadRanges) {
  EXPECT_EQ(error_code_of([] { make_binning(1.0, std::exp(1.0), 1); }),
            ErrorCode::kInvalidRange);
  EXPECT_EQ(error_code_of([] { make_binning(0.0, 1.0, 4); }), ErrorCode::kInvalidRange);
  EXPECT_EQ(error_code_of([] { make_binning(2.0, 1.0, 4); }), ErrorCode::kInvalidRange);
}

TEST(Project, OpticalAxis) {
  Intrinsics k;
  const auto p = project(k, {0, 0, 1});
  EXPECT_EQ(p.u, 0.0);
  EXPECT_EQ(p.v, 0.0);
  EXPECT_EQ(p.depth, 1.0);
}

TEST(Project, HandEvaluatedPoint) {
  const auto p = project(test_intrinsics(), {0.5, 0, 1});
  EXPECT_DOUBLE_EQ(p.u, 178.0);
  EXPECT_DOUBLE_EQ(p.v, 96.0);
  EXPECT_DOUBLE_EQ(p.depth, 1.0);
}

TEST(Project, BehindCameraThrows) {
  EXPECT_EQ(error_code_of([] { project(test_intrinsics(), {0, 0, -1}); }),
            ErrorCode::kBehindCamera);
  EXPECT_EQ(error_code_of([] { project(test_intrinsics(), {0, 0, 0}); }),
            ErrorCode::kBehindCamera);
}

TEST(Backproject, Examples) {
  Intrinsics k;
  EXPECT_EQ(backproject(k, 0, 0, 2), Eigen::Vector3d(0, 0, 2));
  const auto p = backproject(test_intrinsics(), 178, 96, 1);
  EXPECT_DOUBLE_EQ(p.x(), 0.5);
  EXPECT_DOUBLE_EQ(p.y(), 0.0);
  EXPECT_DOUBLE_EQ(p.z(), 1.0);
}

TEST(Backproject, RoundTripRandomPixels) {
  const auto k = test_intrinsics();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0, 255), uy(0, 191), ud(0.1, 12);
  for (int i = 0; i < 100; ++i) {
    const double u = ux(rng), v = uy(rng), d = ud(rng);
    const auto p = project(k, backproject(k, u, v, d));
    EXPECT_NEAR(p.u, u, 1e-12 * 256);
    EXPECT_NEAR(p.v, v, 1e-12 * 256);
    EXPECT_NEAR(p.depth, d, 1e-12 * 12);
  }
}

TEST(RelativePose, SamePoseIsIdentity) {
  std::mt19937_64 rng(1);
  const auto p = random_pose(rng);
  const auto r = relative_pose(p, p);
  EXPECT_TRUE(r.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  EXPECT_LT(r.translation.norm(), 1e-12);
}

TEST(RelativePose, FromIdentityIsTarget) {
  Pose b;
  b.translation = {0.1, -0.2, 0.3};
  const auto r = relative_pose(Pose::identity(), b);
  EXPECT_TRUE(r.translation.isApprox(b.translation));
  EXPECT_TRUE(r.rotation.isApprox(Eigen::Matrix3d::Identity()));
}

TEST(RelativePose, TwoPathComposition) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_pose(rng);
    const auto b = random_pose(rng);
    const Eigen::Vector3d world(0.3, -1.2, 2.5);
    // A world point seen by camera a, moved into camera b, must agree with
    // looking at it from b directly.
    const Eigen::Vector3d via_a = relative_pose(a, b) * (a * world);
    EXPECT_LT((via_a - b * world).norm(), 1e-12);
    EXPECT_TRUE(relative_pose(a, b).is_valid(1e-9));
  }
}

TEST(Intrinsics, ScaledKeepsPixelCentres) {
  const auto k = test_intrinsics().scaled(0.5);
  EXPECT_DOUBLE_EQ(k.fx, 50);
  EXPECT_DOUBLE_EQ(k.cx, (128 + 0.5) * 0.5 - 0.5);
  EXPECT_EQ(k.width, 128);
  EXPECT_EQ(k.height, 96);
}

TEST(Intrinsics, ValidateRejectsNonPositiveFocal) {
  auto k = test_intrinsics();
  k.fx = 0;
  EXPECT_EQ(error_code_of([&] { k.validate(); }), ErrorCode::kInvalidRange);
}

TEST(Errors, NamesAreSnakeCase) {
  EXPECT_EQ(to_string(ErrorCode::kBehindCamera), "behind_camera");
  EXPECT_EQ(to_string(ErrorCode::kUnnormalizedRay), "unnormalized_ray");
}
