#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"

namespace probfuse {

/// Per-pixel discrete depth distribution over a DepthBinning. Pixel rays are
/// stored contiguously: probs[(y * width + x) * K + k].
class ProbabilityVolume {
 public:
  ProbabilityVolume() = default;
  /// All-zero storage; callers fill and normalise.
  ProbabilityVolume(int width, int height, DepthBinning binning);

  int width() const { return width_; }
  int height() const { return height_; }
  int k_count() const { return binning_.k_count(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  const DepthBinning& binning() const { return binning_; }

  std::span<double> ray(std::size_t pixel) {
    return {probs_.data() + pixel * k_count(), static_cast<std::size_t>(k_count())};
  }
  std::span<const double> ray(std::size_t pixel) const {
    return {probs_.data() + pixel * k_count(), static_cast<std::size_t>(k_count())};
  }
  std::span<double> ray(int x, int y) { return ray(static_cast<std::size_t>(y) * width_ + x); }
  std::span<const double> ray(int x, int y) const {
    return ray(static_cast<std::size_t>(y) * width_ + x);
  }

  std::vector<double>& data() { return probs_; }
  const std::vector<double>& data() const { return probs_; }

  bool same_layout(const ProbabilityVolume& other) const;
  /// Checks non-negativity and per-ray unit sums within `tol`.
  bool is_valid(double tol = 1e-9) const;

 private:
  int width_ = 0;
  int height_ = 0;
  DepthBinning binning_;
  std::vector<double> probs_;
};

/// Normalises a ray in place; a ray with zero (or non-finite) mass becomes uniform.
void normalize_ray(std::span<double> ray);

ProbabilityVolume uniform_volume(int width, int height, const DepthBinning& binning);

/// Elementwise product renormalised per pixel. Throws kDimensionMismatch.
ProbabilityVolume fuse(const ProbabilityVolume& keyframe_vol,
                       const ProbabilityVolume& new_vol);
/// In-place variant: keyframe_vol <- fuse(keyframe_vol, new_vol).
void fuse_into(ProbabilityVolume& keyframe_vol, const ProbabilityVolume& new_vol);

/// Controllable stand-in for a network depth distribution.
struct PriorModel {
  double sigma_bins = 2.0;
  double uniform_floor = 0.2;
  double spurious_mode_prob = 0.0;
  double spurious_offset_bins = 8.0;
  std::uint64_t seed = 0;

  void validate() const;
};

ProbabilityVolume synth_prior(const DepthMap& gt_depth, const PriorModel& model,
                              const DepthBinning& binning);

/// Ordinal loss of the volume against ground truth, summed over valid pixels.
double ordinal_loss(const ProbabilityVolume& vol, const DepthMap& gt_depth);

/// Midpoint of the most probable bin; ties go to the nearer bin.
DepthMap argmax_depth(const ProbabilityVolume& vol);
/// Probability-weighted mean of bin midpoints.
DepthMap expected_depth(const ProbabilityVolume& vol);

}  // namespace probfuse
