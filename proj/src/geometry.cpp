#include "probfuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "probfuse/error.hpp"

namespace probfuse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidRange: return "invalid_range";
    case ErrorCode::kBehindCamera: return "behind_camera";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kNonFiniteCost: return "non_finite_cost";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kEmptyAssociation: return "empty_association";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kSizeMismatch: return "size_mismatch";
    case ErrorCode::kNonFiniteValues: return "non_finite_values";
    case ErrorCode::kUnnormalizedRay: return "unnormalized_ray";
    case ErrorCode::kNonUnitNormal: return "non_unit_normal";
    case ErrorCode::kIoFailure: return "io_failure";
    case ErrorCode::kEmptyValidSet: return "empty_valid_set";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "unknown";
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0 ||
      !(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    std::ostringstream msg;
    msg << "invalid intrinsics fx=" << fx << " fy=" << fy << " cx=" << cx
        << " cy=" << cy << " size=" << width << "x" << height;
    throw Error(ErrorCode::kInvalidRange, msg.str());
  }
}

Intrinsics Intrinsics::scaled(double factor) const {
  // Pixel centres sit at integer coordinates, so the principal point maps
  // through (c + 0.5) * s - 0.5 under area resampling.
  Intrinsics out;
  out.fx = fx * factor;
  out.fy = fy * factor;
  out.cx = (cx + 0.5) * factor - 0.5;
  out.cy = (cy + 0.5) * factor - 0.5;
  out.width = static_cast<int>(std::lround(width * factor));
  out.height = static_cast<int>(std::lround(height * factor));
  return out;
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

bool Pose::is_valid(double tol) const {
  const Eigen::Matrix3d err =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return err.cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol &&
         translation.allFinite();
}

Pose relative_pose(const Pose& pose_a, const Pose& pose_b) {
  // b_from_a = b_from_world * world_from_a.
  return pose_b * pose_a.inverse();
}

Projection project(const Intrinsics& intrinsics, const Eigen::Vector3d& point) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorCode::kBehindCamera, "point is not in front of the camera");
  }
  const double inv_z = 1.0 / point.z();
  return {intrinsics.fx * point.x() * inv_z + intrinsics.cx,
          intrinsics.fy * point.y() * inv_z + intrinsics.cy, point.z()};
}

Eigen::Vector3d backproject(const Intrinsics& intrinsics, double u, double v,
                            double depth) {
  return depth * pixel_ray(intrinsics, u, v);
}

int DepthBinning::bin_of(double depth) const {
  if (!(depth > 0.0)) return 0;
  const double c = std::floor(bin_coordinate(depth));
  return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(k_count() - 1)));
}

double DepthBinning::bin_coordinate(double depth) const {
  return (std::log(depth) - std::log(d_min_)) / log_width_;
}

DepthBinning make_binning(double d_min, double d_max, int k_count) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max) || k_count < 2) {
    std::ostringstream msg;
    msg << "invalid binning d_min=" << d_min << " d_max=" << d_max
        << " k_count=" << k_count;
    throw Error(ErrorCode::kInvalidRange, msg.str());
  }
  DepthBinning b;
  b.d_min_ = d_min;
  b.d_max_ = d_max;
  const double log_min = std::log(d_min);
  b.log_width_ = (std::log(d_max) - log_min) / k_count;
  b.midpoints_.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    b.midpoints_[k] = std::exp(log_min + (k + 0.5) * b.log_width_);
  }
  return b;
}

DepthBinning default_binning() { return make_binning(0.1, 12.0, 64); }

}  // namespace probfuse
