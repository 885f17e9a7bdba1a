#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"

namespace probfuse {

/// Unit camera-frame normals; a zero vector marks a pixel without a normal.
using NormalMap = Grid<Eigen::Vector3d>;
/// 1 keeps a pixel's pairwise terms, 0 disables them.
using OcclusionMask = Grid<std::uint8_t>;
/// Per-pixel occlusion-boundary probability in [0, 1].
using BoundaryProbMap = Grid<double>;

inline constexpr double kDefaultBoundaryThreshold = 0.4;

struct EnergyAndGrad {
  double energy = 0.0;
  std::vector<double> grad;
};

/// b = 0 where prob > threshold, else 1. Throws kOutOfRange for values outside [0, 1].
OcclusionMask mask_from_boundary_prob(const BoundaryProbMap& prob_map,
                                      double threshold = kDefaultBoundaryThreshold);

/// Normal-consistency energy: for each pixel i with right neighbour r and
/// lower neighbour l, b_i <n_i, P_i - P_r>^2 + b_i <n_i, P_i - P_l>^2 with
/// P_j = d_j K^-1 u_j. Terms whose neighbour leaves the image are dropped.
/// Throws kDimensionMismatch.
EnergyAndGrad normal_energy_and_grad(const DepthMap& d, const NormalMap& normals,
                                     const OcclusionMask& mask,
                                     const Intrinsics& intrinsics);

/// Precomputed per-pixel rays for repeated evaluation at one resolution.
class NormalTerm {
 public:
  NormalTerm(const NormalMap& normals, const OcclusionMask& mask,
             const Intrinsics& intrinsics);

  double energy(const DepthMap& d) const;
  /// Writes the gradient into `grad` (resized to the pixel count) and returns the energy.
  double energy_and_grad(const DepthMap& d, std::vector<double>& grad) const;

 private:
  int width_;
  int height_;
  // Per pixel: <n_i, ray_i>, <n_i, ray_right>, <n_i, ray_down>; zero when masked.
  std::vector<Eigen::Vector3d> coeffs_;
};

inline constexpr double kTvEpsilon = 1e-6;

/// Smoothed total variation sum_i sqrt(dx^2 + dy^2 + eps^2) using forward
/// differences; a missing neighbour contributes a zero difference.
EnergyAndGrad tv_energy_and_grad(const DepthMap& d, double epsilon = kTvEpsilon);
double tv_energy(const DepthMap& d, double epsilon = kTvEpsilon);

/// Unit normals from the cross product of neighbour differences of the
/// backprojected depth, facing the camera. Invalid depths give zero normals.
NormalMap normals_from_depth(const DepthMap& d, const Intrinsics& intrinsics);

/// Marks pixels next to a depth discontinuity, where the relative jump to a
/// 4-neighbour exceeds `relative_jump`. Output is 1 at boundaries, 0 elsewhere.
BoundaryProbMap boundary_prob_from_depth(const DepthMap& d, double relative_jump = 0.05);

}  // namespace probfuse
