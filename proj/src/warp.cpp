#include "probfuse/warp.hpp"

#include <algorithm>
#include <cmath>

#include "probfuse/error.hpp"

namespace probfuse {

OccupancyVolume::OccupancyVolume(int width, int height, DepthBinning binning, double fill)
    : width_(width), height_(height), binning_(std::move(binning)),
      occ_(static_cast<std::size_t>(width) * height * binning_.k_count(), fill) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidRange, "occupancy dimensions must be positive");
  }
}

OccupancyVolume depth_to_occupancy(const ProbabilityVolume& vol) {
  OccupancyVolume occ(vol.width(), vol.height(), vol.binning());
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    const auto p = vol.ray(i);
    auto out = occ.ray(i);
    double in_front = 0.0;  // mass of depths strictly nearer than bin k
    for (std::size_t k = 0; k < p.size(); ++k) {
      out[k] = std::min(p[k] + 0.5 * in_front, 1.0);
      in_front += p[k];
    }
  }
  return occ;
}

ProbabilityVolume occupancy_to_depth(const OccupancyVolume& occ) {
  ProbabilityVolume vol(occ.width(), occ.height(), occ.binning());
  for (std::size_t i = 0; i < occ.pixel_count(); ++i) {
    const auto o = occ.ray(i);
    auto p = vol.ray(i);
    double free_so_far = 1.0;
    for (std::size_t k = 0; k < o.size(); ++k) {
      p[k] = free_so_far * o[k];
      free_so_far *= 1.0 - o[k];
    }
    normalize_ray(p);
  }
  return vol;
}

OccupancyVolume warp_occupancy(const OccupancyVolume& occ, const Pose& new_from_old,
                               const Intrinsics& intrinsics, double default_occ) {
  if (!(default_occ >= 0.0 && default_occ <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "default occupancy outside [0, 1]");
  }
  const int w = occ.width();
  const int h = occ.height();
  if (intrinsics.width != w || intrinsics.height != h) {
    throw Error(ErrorCode::kDimensionMismatch, "intrinsics do not match occupancy grid");
  }
  const DepthBinning& binning = occ.binning();
  const int kc = binning.k_count();
  const Pose old_from_new = new_from_old.inverse();
  OccupancyVolume out(w, h, binning, default_occ);
  // Rounding in the pinhole round trip can put aligned samples a hair outside the image.
  constexpr double kEdgeSlack = 1e-9;
  const double max_u = w - 1;
  const double max_v = h - 1;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d ray = old_from_new.rotation * pixel_ray(intrinsics, x, y);
      auto dst = out.ray(static_cast<std::size_t>(y) * w + x);
      for (int k = 0; k < kc; ++k) {
        const Eigen::Vector3d q = binning.midpoint(k) * ray + old_from_new.translation;
        const double z = q.z();
        if (!(z >= binning.d_min() && z <= binning.d_max())) continue;
        double u = intrinsics.fx * q.x() / z + intrinsics.cx;
        double v = intrinsics.fy * q.y() / z + intrinsics.cy;
        if (u < -kEdgeSlack || v < -kEdgeSlack || u > max_u + kEdgeSlack ||
            v > max_v + kEdgeSlack) {
          continue;
        }
        u = std::clamp(u, 0.0, max_u);
        v = std::clamp(v, 0.0, max_v);
        const int bin = binning.bin_of(z);
        const int x0 = static_cast<int>(u);
        const int y0 = static_cast<int>(v);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double ax = u - x0;
        const double ay = v - y0;
        const double top = (1.0 - ax) * occ.at(x0, y0, bin) + ax * occ.at(x1, y0, bin);
        const double bottom = (1.0 - ax) * occ.at(x0, y1, bin) + ax * occ.at(x1, y1, bin);
        dst[k] = (1.0 - ay) * top + ay * bottom;
      }
    }
  }
  return out;
}

ProbabilityVolume propagate_keyframe(const ProbabilityVolume& old_kf_vol,
                                     const ProbabilityVolume& network_prior,
                                     const Pose& new_from_old,
                                     const Intrinsics& intrinsics, double default_occ) {
  if (!old_kf_vol.same_layout(network_prior)) {
    throw Error(ErrorCode::kDimensionMismatch, "old keyframe volume and prior differ");
  }
  const OccupancyVolume warped = warp_occupancy(depth_to_occupancy(old_kf_vol),
                                                new_from_old, intrinsics, default_occ);
  return fuse(network_prior, occupancy_to_depth(warped));
}

}  // namespace probfuse
