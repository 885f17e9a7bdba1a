#pragma once

#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/volume.hpp"

namespace probfuse {

/// Per-voxel occupancy probability along each pixel ray, same layout as
/// ProbabilityVolume.
class OccupancyVolume {
 public:
  OccupancyVolume() = default;
  OccupancyVolume(int width, int height, DepthBinning binning, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int k_count() const { return binning_.k_count(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  const DepthBinning& binning() const { return binning_; }

  std::span<double> ray(std::size_t pixel) {
    return {occ_.data() + pixel * k_count(), static_cast<std::size_t>(k_count())};
  }
  std::span<const double> ray(std::size_t pixel) const {
    return {occ_.data() + pixel * k_count(), static_cast<std::size_t>(k_count())};
  }
  double at(int x, int y, int k) const {
    return occ_[(static_cast<std::size_t>(y) * width_ + x) * k_count() + k];
  }

  std::vector<double>& data() { return occ_; }
  const std::vector<double>& data() const { return occ_; }

 private:
  int width_ = 0;
  int height_ = 0;
  DepthBinning binning_;
  std::vector<double> occ_;
};

inline constexpr double kDefaultOccupancy = 0.01;

/// occ[k] = p(k) + 0.5 * sum_{j<k} p(j): occupied at the surface, unknown behind it.
OccupancyVolume depth_to_occupancy(const ProbabilityVolume& vol);

/// p(k) proportional to occ[k] * prod_{j<k} (1 - occ[j]); empty rays become uniform.
ProbabilityVolume occupancy_to_depth(const OccupancyVolume& occ);

/// Resamples the occupancy grid into a new camera. Each new voxel is
/// backprojected at its bin midpoint and looked up in the old grid (bilinear
/// in the image, nearest bin in log-depth); misses take `default_occ`.
OccupancyVolume warp_occupancy(const OccupancyVolume& occ, const Pose& new_from_old,
                               const Intrinsics& intrinsics,
                               double default_occ = kDefaultOccupancy);

/// fuse(prior, occupancy_to_depth(warp_occupancy(depth_to_occupancy(old), ...))).
ProbabilityVolume propagate_keyframe(const ProbabilityVolume& old_kf_vol,
                                     const ProbabilityVolume& network_prior,
                                     const Pose& new_from_old,
                                     const Intrinsics& intrinsics,
                                     double default_occ = kDefaultOccupancy);

}  // namespace probfuse
