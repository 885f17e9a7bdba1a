#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "probfuse/regularizer.hpp"
#include "test_support.hpp"

using namespace probfuse;
using namespace probfuse::testing;

namespace {

Intrinsics grid_intrinsics(int w, int h) {
  Intrinsics k;
  k.fx = k.fy = 10.0;
  k.cx = (w - 1) / 2.0;
  k.cy = (h - 1) / 2.0;
  k.width = w;
  k.height = h;
  return k;
}

DepthMap random_depth(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, 3.0);
  DepthMap d(w, h);
  for (double& v : d.values()) v = u(rng);
  return d;
}

NormalMap random_normals(int w, int h, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  NormalMap n(w, h);
  for (auto& v : n.values()) v = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
  return n;
}

OcclusionMask random_mask(int w, int h, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(0.8);
  OcclusionMask m(w, h);
  for (auto& v : m.values()) v = keep(rng) ? 1 : 0;
  return m;
}

// Sum of b_i <n_i, P_i - P_j>^2 over right and lower neighbours, from 3-D points.
double brute_normal_energy(const DepthMap& d, const NormalMap& n, const OcclusionMask& m,
                           const Intrinsics& k) {
  auto p = [&](int x, int y) { return backproject(k, x, y, d(x, y)); };
  double e = 0.0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!m(x, y)) continue;
      if (x + 1 < d.width()) e += std::pow(n(x, y).dot(p(x, y) - p(x + 1, y)), 2);
      if (y + 1 < d.height()) e += std::pow(n(x, y).dot(p(x, y) - p(x, y + 1)), 2);
    }
  }
  return e;
}

template <typename Energy>
void expect_gradient_matches(const DepthMap& d, const std::vector<double>& grad, Energy energy,
                             double h, double rel) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double fd = central_difference(
        [&](double v) {
          DepthMap probe = d;
          probe[i] = v;
          return energy(probe);
        },
        d[i], h);
    EXPECT_TRUE(relative_match(grad[i], fd, rel, 1e-7)) << i << " " << grad[i] << " " << fd;
  }
}

/// Depth map of the plane n.P = c seen through `k`.
DepthMap plane_depth(const Eigen::Vector3d& n, double c, const Intrinsics& k) {
  DepthMap d(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) d(x, y) = c / n.dot(pixel_ray(k, x, y));
  }
  return d;
}

}  // namespace

TEST(OcclusionMask, Thresholding) {
  BoundaryProbMap p(3, 1);
  p[0] = 0.0;
  p[1] = 0.4;
  p[2] = 0.41;
  const auto m = mask_from_boundary_prob(p);
  EXPECT_EQ(m[0], 1);
  EXPECT_EQ(m[1], 1);  // strictly greater than the threshold disables
  EXPECT_EQ(m[2], 0);
  {
    const auto out = mask_from_boundary_prob(BoundaryProbMap(4, 4, 0.0));
    for (auto v : out.values()) EXPECT_EQ(v, 1);
  }
  {
    const auto out = mask_from_boundary_prob(BoundaryProbMap(4, 4, 1.0));
    for (auto v : out.values()) EXPECT_EQ(v, 0);
  }
}

TEST(OcclusionMask, RejectsOutOfRange) {
  EXPECT_EQ(error_code_of([] { mask_from_boundary_prob(BoundaryProbMap(2, 2, 1.5)); }),
            ErrorCode::kOutOfRange);
  EXPECT_EQ(error_code_of([] { mask_from_boundary_prob(BoundaryProbMap(2, 2, NAN)); }),
            ErrorCode::kOutOfRange);
}

TEST(NormalEnergy, MatchesPointFormulation) {
  std::mt19937_64 rng(31);
  const auto k = grid_intrinsics(8, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_depth(8, 8, rng);
    const auto n = random_normals(8, 8, rng);
    const auto m = random_mask(8, 8, rng);
    const auto e = normal_energy_and_grad(d, n, m, k);
    const double brute = brute_normal_energy(d, n, m, k);
    EXPECT_NEAR(e.energy, brute, 1e-12 * brute);
  }
}

TEST(NormalEnergy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(37);
  const auto k = grid_intrinsics(8, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_depth(8, 8, rng);
    const auto n = random_normals(8, 8, rng);
    const auto m = random_mask(8, 8, rng);
    const auto e = normal_energy_and_grad(d, n, m, k);
    expect_gradient_matches(
        d, e.grad, [&](const DepthMap& p) { return brute_normal_energy(p, n, m, k); }, 1e-6,
        1e-4);
  }
}

TEST(NormalEnergy, PlaneWithTrueNormalsIsFlat) {
  const auto k = grid_intrinsics(8, 8);
  const Eigen::Vector3d normal = Eigen::Vector3d(0.2, -0.3, 1.0).normalized();
  const auto d = plane_depth(normal, 2.0, k);
  const auto e = normal_energy_and_grad(d, NormalMap(8, 8, normal), OcclusionMask(8, 8, 1), k);
  EXPECT_LT(e.energy, 1e-10);
  for (double g : e.grad) EXPECT_LT(std::abs(g), 1e-10);
}

TEST(NormalEnergy, ZeroMaskIsZero) {
  std::mt19937_64 rng(41);
  const auto k = grid_intrinsics(8, 8);
  const auto e = normal_energy_and_grad(random_depth(8, 8, rng), random_normals(8, 8, rng),
                                        OcclusionMask(8, 8, 0), k);
  EXPECT_EQ(e.energy, 0.0);
  for (double g : e.grad) EXPECT_EQ(g, 0.0);
}

TEST(NormalEnergy, DimensionMismatchThrows) {
  const auto k = grid_intrinsics(8, 8);
  EXPECT_EQ(error_code_of([&] {
              normal_energy_and_grad(DepthMap(8, 8, 1.0), NormalMap(7, 8), OcclusionMask(7, 8), k);
            }),
            ErrorCode::kDimensionMismatch);
}

TEST(TotalVariation, ConstantDepth) {
  const auto e = tv_energy_and_grad(DepthMap(8, 6, 2.0));
  EXPECT_NEAR(e.energy, 48 * kTvEpsilon, 1e-18);
  for (double g : e.grad) EXPECT_EQ(g, 0.0);
}

TEST(TotalVariation, LinearRamp) {
  const int w = 8, h = 6;
  const double slope = 0.3;
  DepthMap d(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) d(x, y) = 1.0 + slope * x;
  }
  // (w - 1) * h forward differences of size `slope`; the last column contributes eps.
  EXPECT_NEAR(tv_energy(d), slope * (w - 1) * h + h * kTvEpsilon, 1e-9);
}

TEST(TotalVariation, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_depth(8, 8, rng);
    const auto e = tv_energy_and_grad(d);
    EXPECT_DOUBLE_EQ(e.energy, tv_energy(d));
    expect_gradient_matches(
        d, e.grad, [](const DepthMap& p) { return tv_energy(p); }, 1e-6, 1e-4);
  }
}

TEST(NormalsFromDepth, FrontoparallelPlane) {
  const auto k = grid_intrinsics(10, 8);
  const auto n = normals_from_depth(DepthMap(10, 8, 2.0), k);
  for (const auto& v : n.values()) {
    EXPECT_NEAR(v.x(), 0.0, 1e-6);
    EXPECT_NEAR(v.y(), 0.0, 1e-6);
    EXPECT_NEAR(v.z(), -1.0, 1e-6);
  }
}

TEST(NormalsFromDepth, SlantedPlane) {
  const auto k = grid_intrinsics(12, 9);
  const Eigen::Vector3d normal = Eigen::Vector3d(0.4, 0.25, 1.0).normalized();
  const auto n = normals_from_depth(plane_depth(normal, 2.5, k), k);
  for (const auto& v : n.values()) {
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    // Camera-facing orientation of the plane's normal.
    EXPECT_LT((v + normal).norm(), 1e-4);
  }
}

TEST(NormalsFromDepth, InvalidDepthGivesZero) {
  const auto k = grid_intrinsics(4, 4);
  DepthMap d(4, 4, 2.0);
  d(1, 1) = 0.0;
  const auto n = normals_from_depth(d, k);
  EXPECT_EQ(n(1, 1), Eigen::Vector3d::Zero());
  EXPECT_NEAR(n(3, 3).norm(), 1.0, 1e-12);
}

TEST(BoundaryFromDepth, MarksBothSidesOfAJump) {
  DepthMap d(4, 1, 2.0);
  d(2, 0) = d(3, 0) = 3.0;
  const auto b = boundary_prob_from_depth(d);
  EXPECT_EQ(b(0, 0), 0.0);
  EXPECT_EQ(b(1, 0), 1.0);
  EXPECT_EQ(b(2, 0), 1.0);
  EXPECT_EQ(b(3, 0), 0.0);
}
