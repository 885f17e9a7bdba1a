#include "probfuse/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "probfuse/error.hpp"

namespace probfuse {

namespace {
constexpr double kEdgeSlack = 1e-6;
}  // namespace

PhotoCostVolume::PhotoCostVolume(int width, int height, DepthBinning binning)
    : width_(width), height_(height), binning_(std::move(binning)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidRange, "cost volume dimensions must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height * binning_.k_count();
  cost_.assign(n, 0.0);
  count_.assign(n, 0);
}

GrayImage normalize_image(const GrayImage& gray) {
  GrayImage out(gray.width(), gray.height(), 0.0);
  const double n = static_cast<double>(gray.size());
  if (gray.size() == 0) return out;
  double mean = 0.0;
  for (double v : gray.values()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : gray.values()) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / n);
  if (stddev < 1e-8) return out;
  for (std::size_t i = 0; i < gray.size(); ++i) out[i] = (gray[i] - mean) / stddev;
  return out;
}

GrayImage normalize_image(const RgbImage& rgb) {
  GrayImage gray(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const Rgb& c = rgb[i];
    gray[i] = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
  }
  return normalize_image(gray);
}

void accumulate_cost(PhotoCostVolume& cost_vol, const GrayImage& keyframe,
                     const GrayImage& reference, const Pose& ref_from_kf,
                     const Intrinsics& intrinsics) {
  const int w = cost_vol.width();
  const int h = cost_vol.height();
  if (!keyframe.same_shape(w, h) || !reference.same_shape(w, h) ||
      intrinsics.width != w || intrinsics.height != h) {
    throw Error(ErrorCode::kDimensionMismatch,
                "keyframe, reference, intrinsics and cost volume must share dimensions");
  }
  const int kc = cost_vol.k_count();
  const auto& mids = cost_vol.binning().midpoints();
  const double max_u = w - 1;
  const double max_v = h - 1;

  // Rotated keyframe rays; a keyframe pixel at depth d lands at d * ray + t.
  std::vector<Eigen::Vector3d> rotated(keyframe.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      rotated[keyframe.index(x, y)] = ref_from_kf.rotation * pixel_ray(intrinsics, x, y);
    }
  }

  // Squared residual of each keyframe pixel warped at one depth hypothesis;
  // NaN where the warp is invalid.
  constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();
  GrayImage residual(w, h);
  for (int k = 0; k < kc; ++k) {
    const double depth = mids[k];
    for (std::size_t i = 0; i < residual.size(); ++i) {
      const Eigen::Vector3d q = depth * rotated[i] + ref_from_kf.translation;
      if (!(q.z() > 0.0)) {
        residual[i] = kInvalid;
        continue;
      }
      double u = intrinsics.fx * q.x() / q.z() + intrinsics.cx;
      double v = intrinsics.fy * q.y() / q.z() + intrinsics.cy;
      // Allow rounding noise at the image border.
      if (!(u >= -kEdgeSlack && u <= max_u + kEdgeSlack && v >= -kEdgeSlack &&
            v <= max_v + kEdgeSlack)) {
        residual[i] = kInvalid;
        continue;
      }
      u = std::clamp(u, 0.0, max_u);
      v = std::clamp(v, 0.0, max_v);
      const double r = keyframe[i] - sample_bilinear(reference, u, v);
      residual[i] = r * r;
    }
    // 3x3 box sum; any invalid or missing patch member invalidates the sample.
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        double ssd = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) ssd += residual(x + dx, y + dy);
        }
        if (std::isnan(ssd)) continue;
        const std::size_t slot = residual.index(x, y) * kc + k;
        cost_vol.cost()[slot] += ssd;
        cost_vol.sample_count()[slot] += 1;
      }
    }
  }
}

ProbabilityVolume cost_to_probability(const PhotoCostVolume& cost_vol,
                                      const CostConversionOptions& options) {
  if (options.mode == CostConversion::kSoftmax && !(options.temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidRange, "softmax temperature must be positive");
  }
  ProbabilityVolume vol(cost_vol.width(), cost_vol.height(), cost_vol.binning());
  const int kc = cost_vol.k_count();
  std::vector<double> mean(kc);
  std::vector<bool> observed(kc);

  for (std::size_t i = 0; i < cost_vol.pixel_count(); ++i) {
    auto ray = vol.ray(i);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double observed_sum = 0.0;
    int observed_bins = 0;
    for (int k = 0; k < kc; ++k) {
      const int n = cost_vol.samples(i, k);
      observed[k] = n > 0;
      if (n == 0) continue;
      mean[k] = cost_vol.cost(i, k) / n;
      lo = std::min(lo, mean[k]);
      hi = std::max(hi, mean[k]);
      observed_sum += mean[k];
      ++observed_bins;
    }
    if (observed_bins == 0) {
      std::fill(ray.begin(), ray.end(), 1.0 / kc);
      continue;
    }
    // Bins no frame could observe carry no evidence; they get the ray's average.
    const double neutral = observed_sum / observed_bins;
    for (int k = 0; k < kc; ++k) {
      if (!observed[k]) mean[k] = neutral;
    }
    if (options.mode == CostConversion::kShiftLinear) {
      const double eps = 1e-6 * (hi - lo + 1e-12);
      for (int k = 0; k < kc; ++k) ray[k] = hi - mean[k] + eps;
    } else {
      for (int k = 0; k < kc; ++k) {
        ray[k] = std::exp(-(mean[k] - lo) / options.temperature);
      }
    }
    normalize_ray(ray);
  }
  return vol;
}

}  // namespace probfuse
