#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"
#include "probfuse/regularizer.hpp"
#include "probfuse/volume.hpp"

namespace probfuse {

struct FrameRecord {
  double timestamp = 0.0;
  std::filesystem::path rgb_path;
  std::optional<std::filesystem::path> depth_path;
  /// Camera-from-world.
  Pose pose;
};

struct SequenceIndex {
  std::filesystem::path root;
  /// Intrinsics of the stored images (before any resampling).
  Intrinsics intrinsics;
  std::vector<FrameRecord> frames;
};

inline constexpr double kDefaultAssociationTolerance = 0.02;
inline constexpr int kProcessingWidth = 256;
inline constexpr int kProcessingHeight = 192;
inline constexpr double kTumDepthScale = 5000.0;

/// Freiburg 1 RGB calibration at 640x480.
Intrinsics tum_freiburg1_intrinsics();

/// TUM quaternion pose line (world-from-camera, tx ty tz qx qy qz qw)
/// converted to camera-from-world.
Pose pose_from_tum(double tx, double ty, double tz, double qx, double qy, double qz,
                   double qw);

/// Reads rgb.txt, groundtruth.txt and optional depth.txt under `dir`,
/// associating each rgb frame with the nearest pose (and depth frame) within
/// `tolerance` seconds. An optional intrinsics.txt ("fx fy cx cy width height")
/// overrides the Freiburg 1 calibration.
/// Throws kMissingFile, kEmptyAssociation.
SequenceIndex load_tum_sequence(const std::filesystem::path& dir,
                                double tolerance = kDefaultAssociationTolerance);

/// Writes rgb.txt / depth.txt / groundtruth.txt / intrinsics.txt for `seq`.
/// Images must already exist at the recorded paths (relative to `dir`).
void write_tum_index(const std::filesystem::path& dir, const SequenceIndex& seq);

RgbImage load_rgb_png(const std::filesystem::path& path);
void save_rgb_png(const RgbImage& img, const std::filesystem::path& path);
/// 16-bit PNG at `scale` units per metre; zero becomes an invalid depth.
DepthMap load_depth_png(const std::filesystem::path& path, double scale = kTumDepthScale);

/// round(depth * scale) as 16-bit grayscale, 0 for invalid pixels. Returns the
/// number of pixels clamped at 65535. Throws kIoFailure.
int export_depth_png(const DepthMap& d, const std::filesystem::path& path,
                     double scale = kTumDepthScale);

/// Area-averaging resample.
RgbImage downsample_rgb(const RgbImage& img, int width, int height);
/// Each output pixel takes the valid source depth nearest its centre within its footprint.
DepthMap downsample_depth(const DepthMap& d, int width, int height);

// Binary interchange formats. All little-endian:
//   PVOL1: "PVOL1" u32 width, u32 height, u32 k_count, f64 d_min, f64 d_max,
//          then width*height*k_count f32, row-major pixels, bins within a pixel.
//   NRML1: "NRML1" u32 width, u32 height, then width*height*3 f32.
//   OBND1: "OBND1" u32 width, u32 height, then width*height f32.

/// Rays are written so their double-precision sum is 1 within 1e-10, which
/// makes load/save a fixed point.
void save_prior(const ProbabilityVolume& vol, const std::filesystem::path& path);
/// Rays off unit mass by more than 1e-10 and at most 1e-4 are renormalised.
/// Throws kBadMagic, kSizeMismatch, kNonFiniteValues, kUnnormalizedRay, kMissingFile.
ProbabilityVolume load_prior(const std::filesystem::path& path);

void save_normals(const NormalMap& normals, const std::filesystem::path& path);
/// Accepts unit vectors (within 1e-4, renormalised) and zero vectors.
/// Throws kNonUnitNormal besides the common format errors.
NormalMap load_normals(const std::filesystem::path& path);

void save_boundary(const BoundaryProbMap& prob, const std::filesystem::path& path);
/// Throws kOutOfRange for probabilities outside [0, 1].
BoundaryProbMap load_boundary(const std::filesystem::path& path);

}  // namespace probfuse
