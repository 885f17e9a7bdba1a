#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <vector>

namespace probfuse {

/// Pinhole intrinsics in pixels. Lens distortion is not modelled.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws kInvalidRange when the invariants do not hold.
  void validate() const;
  /// Intrinsics for the same camera resampled by `factor` (e.g. 0.4 for 640->256).
  Intrinsics scaled(double factor) const;
  Eigen::Matrix3d matrix() const;
};

/// Rigid transform, camera-from-world: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Pose inverse() const;
  /// True when the rotation is orthonormal with det +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Maps points from frame a's camera coordinates into frame b's.
Pose relative_pose(const Pose& pose_a, const Pose& pose_b);

struct Projection {
  double u;
  double v;
  double depth;
};

/// Throws kBehindCamera when point.z <= 0.
Projection project(const Intrinsics& intrinsics, const Eigen::Vector3d& point);
Eigen::Vector3d backproject(const Intrinsics& intrinsics, double u, double v,
                            double depth);

/// Ray direction K^-1 (u, v, 1) for pixel (u, v).
inline Eigen::Vector3d pixel_ray(const Intrinsics& k, double u, double v) {
  return {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
}

/// Uniform discretisation of log-depth into k_count bins over [d_min, d_max).
class DepthBinning {
 public:
  DepthBinning() = default;

  int k_count() const { return static_cast<int>(midpoints_.size()); }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  /// Width of one bin in log-depth.
  double log_width() const { return log_width_; }
  const std::vector<double>& midpoints() const { return midpoints_; }
  double midpoint(int k) const { return midpoints_[k]; }

  /// floor(K (ln d - ln d_min) / (ln d_max - ln d_min)), clamped to [0, K-1].
  int bin_of(double depth) const;
  /// Continuous bin coordinate; bin k covers [k, k+1).
  double bin_coordinate(double depth) const;

  bool operator==(const DepthBinning&) const = default;

 private:
  friend DepthBinning make_binning(double d_min, double d_max, int k_count);

  double d_min_ = 0.0;
  double d_max_ = 0.0;
  double log_width_ = 0.0;
  std::vector<double> midpoints_;
};

/// Throws kInvalidRange unless 0 < d_min < d_max and k_count >= 2.
DepthBinning make_binning(double d_min, double d_max, int k_count);

/// 64 bins over 0.1-12 m.
DepthBinning default_binning();

}  // namespace probfuse
