#pragma once

#include <filesystem>
#include <vector>

#include "probfuse/dataset_io.hpp"
#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"

namespace probfuse::synthetic {

/// Ray-cast scene: a slanted textured back plane with a textured box in front.
struct SceneOptions {
  /// Back plane through (0, 0, plane_depth) in world coordinates; its normal
  /// is tilted by plane_tilt radians about the world x axis.
  double plane_depth = 3.0;
  double plane_tilt = 0.35;
  Eigen::Vector3d box_center{0.25, 0.05, 1.6};
  Eigen::Vector3d box_half_size{0.3, 0.3, 0.3};
  double texture_scale = 1.0;
};

struct SequenceOptions {
  SceneOptions scene;
  int frames = 10;
  /// Per-frame camera translation in world coordinates (metres).
  Eigen::Vector3d step{0.02, 0.004, 0.0};
  /// Per-frame yaw (radians) about the camera y axis.
  double yaw_step = 0.0;
  /// 2x2 supersampling per pixel when true.
  bool antialias = true;
};

struct Frame {
  RgbImage rgb;
  DepthMap depth;
  /// Camera-from-world.
  Pose pose;
};

/// Freiburg 1 calibration resampled to 256x192.
Intrinsics default_intrinsics();

/// Renders one view. `pose` is camera-from-world.
Frame render(const SceneOptions& scene, const Intrinsics& intrinsics, const Pose& pose,
             bool antialias = true);

/// Frames along a straight path starting at the world origin.
std::vector<Frame> render_sequence(const SequenceOptions& options,
                                   const Intrinsics& intrinsics);

/// Writes a TUM-layout dataset (rgb/, depth/, rgb.txt, depth.txt,
/// groundtruth.txt, intrinsics.txt) with frames 1/30 s apart.
SequenceIndex write_dataset(const std::filesystem::path& dir,
                            const std::vector<Frame>& frames,
                            const Intrinsics& intrinsics);

}  // namespace probfuse::synthetic
