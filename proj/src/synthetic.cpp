#include "probfuse/synthetic.hpp"

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "probfuse/error.hpp"

namespace probfuse::synthetic {

namespace {

double hash01(int x, int y, int seed) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 374761393u +
                    static_cast<std::uint32_t>(y) * 668265263u +
                    static_cast<std::uint32_t>(seed) * 2246822519u;
  h = (h ^ (h >> 13)) * 1274126177u;
  h ^= h >> 16;
  return (h & 0xFFFFFF) / static_cast<double>(0xFFFFFF);
}

// Smoothly interpolated lattice noise in [0, 1].
double value_noise(double u, double v, int seed) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const int x = static_cast<int>(fu);
  const int y = static_cast<int>(fv);
  auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double tx = fade(u - fu);
  const double ty = fade(v - fv);
  const double a = hash01(x, y, seed) * (1 - tx) + hash01(x + 1, y, seed) * tx;
  const double b = hash01(x, y + 1, seed) * (1 - tx) + hash01(x + 1, y + 1, seed) * tx;
  return a * (1 - ty) + b * ty;
}

Rgb texture(double u, double v, int seed, double scale) {
  u *= scale;
  v *= scale;
  double n = 0.0;
  double amp = 0.5;
  double freq = 6.0;
  for (int octave = 0; octave < 3; ++octave) {
    n += amp * value_noise(u * freq, v * freq, seed + octave);
    amp *= 0.5;
    freq *= 2.1;
  }
  const double stripes = 0.5 + 0.5 * std::sin(9.0 * u + 4.0 * v + seed);
  const double base = 0.65 * n / 0.875 + 0.35 * stripes;
  const double tint = seed == 0 ? 0.9 : 1.1;
  return {255.0 * std::clamp(base * tint, 0.0, 1.0), 255.0 * std::clamp(base, 0.0, 1.0),
          255.0 * std::clamp(base / tint, 0.0, 1.0)};
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Rgb color{};
};

}  // namespace

Intrinsics default_intrinsics() { return tum_freiburg1_intrinsics().scaled(0.4); }

Frame render(const SceneOptions& scene, const Intrinsics& intrinsics, const Pose& pose,
             bool antialias) {
  const Pose world_from_cam = pose.inverse();
  const Eigen::Vector3d origin = world_from_cam.translation;
  const Eigen::Vector3d plane_normal(0.0, std::sin(scene.plane_tilt), -std::cos(scene.plane_tilt));
  const Eigen::Vector3d plane_point(0.0, 0.0, scene.plane_depth);
  const Eigen::Vector3d plane_u = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d plane_v = plane_normal.cross(plane_u).normalized();
  const Eigen::Vector3d box_lo = scene.box_center - scene.box_half_size;
  const Eigen::Vector3d box_hi = scene.box_center + scene.box_half_size;

  auto trace = [&](const Eigen::Vector3d& dir) {
    Hit hit;
    const double denom = plane_normal.dot(dir);
    if (std::abs(denom) > 1e-12) {
      const double t = plane_normal.dot(plane_point - origin) / denom;
      if (t > 0.0) {
        const Eigen::Vector3d p = origin + t * dir - plane_point;
        hit = {t, texture(p.dot(plane_u), p.dot(plane_v), 0, scene.texture_scale)};
      }
    }
    // Slab test against the axis-aligned box.
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int axis = 0;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(dir[a]) < 1e-15) {
        if (origin[a] < box_lo[a] || origin[a] > box_hi[a]) return hit;
        continue;
      }
      double t0 = (box_lo[a] - origin[a]) / dir[a];
      double t1 = (box_hi[a] - origin[a]) / dir[a];
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_near) {
        t_near = t0;
        axis = a;
      }
      t_far = std::min(t_far, t1);
    }
    if (t_near <= t_far && t_near > 0.0 && t_near < hit.t) {
      const Eigen::Vector3d p = origin + t_near * dir - scene.box_center;
      const int ua = (axis + 1) % 3;
      const int va = (axis + 2) % 3;
      hit = {t_near, texture(p[ua] + 3.0 * axis, p[va], 1, scene.texture_scale)};
    }
    return hit;
  };

  Frame frame;
  frame.pose = pose;
  frame.rgb = RgbImage(intrinsics.width, intrinsics.height);
  frame.depth = DepthMap(intrinsics.width, intrinsics.height, 0.0);
  static constexpr std::array<std::array<double, 2>, 4> kSubpixels = {
      {{-0.25, -0.25}, {0.25, -0.25}, {-0.25, 0.25}, {0.25, 0.25}}};
  for (int y = 0; y < intrinsics.height; ++y) {
    for (int x = 0; x < intrinsics.width; ++x) {
      const Eigen::Vector3d ray = pixel_ray(intrinsics, x, y);
      const Hit centre = trace(world_from_cam.rotation * ray);
      if (std::isfinite(centre.t)) frame.depth(x, y) = centre.t;  // ray has unit z
      Rgb color{0.0, 0.0, 0.0};
      if (antialias) {
        for (const auto& s : kSubpixels) {
          const Hit h = trace(world_from_cam.rotation * pixel_ray(intrinsics, x + s[0], y + s[1]));
          for (int c = 0; c < 3; ++c) color[c] += 0.25 * h.color[c];
        }
      } else {
        color = centre.color;
      }
      frame.rgb(x, y) = color;
    }
  }
  return frame;
}

std::vector<Frame> render_sequence(const SequenceOptions& options,
                                   const Intrinsics& intrinsics) {
  std::vector<Frame> frames;
  frames.reserve(options.frames);
  for (int i = 0; i < options.frames; ++i) {
    Pose world_from_cam;
    world_from_cam.translation = options.step * i;
    world_from_cam.rotation =
        Eigen::AngleAxisd(options.yaw_step * i, Eigen::Vector3d::UnitY()).toRotationMatrix();
    frames.push_back(render(options.scene, intrinsics, world_from_cam.inverse(),
                            options.antialias));
  }
  return frames;
}

SequenceIndex write_dataset(const std::filesystem::path& dir,
                            const std::vector<Frame>& frames,
                            const Intrinsics& intrinsics) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  SequenceIndex seq;
  seq.root = dir;
  seq.intrinsics = intrinsics;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    FrameRecord record;
    record.timestamp = 1.0 + static_cast<double>(i) / 30.0;
    record.rgb_path = dir / "rgb" / name;
    record.depth_path = dir / "depth" / name;
    record.pose = frames[i].pose;
    save_rgb_png(frames[i].rgb, record.rgb_path);
    export_depth_png(frames[i].depth, *record.depth_path);
    seq.frames.push_back(std::move(record));
  }
  write_tum_index(dir, seq);
  return seq;
}

}  // namespace probfuse::synthetic
