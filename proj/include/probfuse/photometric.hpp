#pragma once

#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"
#include "probfuse/volume.hpp"

namespace probfuse {

/// Accumulated plane-sweep SSD for each keyframe pixel and depth bin, with
/// the number of frames that contributed a valid sample.
class PhotoCostVolume {
 public:
  PhotoCostVolume() = default;
  PhotoCostVolume(int width, int height, DepthBinning binning);

  int width() const { return width_; }
  int height() const { return height_; }
  int k_count() const { return binning_.k_count(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  const DepthBinning& binning() const { return binning_; }

  std::vector<double>& cost() { return cost_; }
  const std::vector<double>& cost() const { return cost_; }
  std::vector<int>& sample_count() { return count_; }
  const std::vector<int>& sample_count() const { return count_; }

  double cost(std::size_t pixel, int k) const { return cost_[pixel * k_count() + k]; }
  int samples(std::size_t pixel, int k) const { return count_[pixel * k_count() + k]; }

 private:
  int width_ = 0;
  int height_ = 0;
  DepthBinning binning_;
  std::vector<double> cost_;
  std::vector<int> count_;
};

/// Luminance, then zero-mean unit-variance over the image. Constant images map to zeros.
GrayImage normalize_image(const RgbImage& rgb);
GrayImage normalize_image(const GrayImage& gray);

/// Adds one reference frame's 3x3-patch SSD to every (pixel, bin) whose warped
/// patch lands fully inside the reference image and in front of the camera.
/// `ref_from_kf` maps keyframe camera coordinates into the reference camera.
void accumulate_cost(PhotoCostVolume& cost_vol, const GrayImage& keyframe,
                     const GrayImage& reference, const Pose& ref_from_kf,
                     const Intrinsics& intrinsics);

enum class CostConversion { kShiftLinear, kSoftmax };

struct CostConversionOptions {
  CostConversion mode = CostConversion::kShiftLinear;
  double temperature = 1.0;  // softmax only
};

ProbabilityVolume cost_to_probability(const PhotoCostVolume& cost_vol,
                                      const CostConversionOptions& options = {});

}  // namespace probfuse
