#include "probfuse/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "probfuse/error.hpp"

namespace probfuse {

namespace {

constexpr double kLogFloor = 1e-12;

void require_same_layout(const ProbabilityVolume& a, const ProbabilityVolume& b) {
  if (!a.same_layout(b)) {
    std::ostringstream msg;
    msg << "volume layout mismatch: " << a.width() << "x" << a.height() << "x"
        << a.k_count() << " vs " << b.width() << "x" << b.height() << "x"
        << b.k_count();
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

}  // namespace

ProbabilityVolume::ProbabilityVolume(int width, int height, DepthBinning binning)
    : width_(width), height_(height), binning_(std::move(binning)),
      probs_(static_cast<std::size_t>(width) * height * binning_.k_count(), 0.0) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidRange, "volume dimensions must be positive");
  }
}

bool ProbabilityVolume::same_layout(const ProbabilityVolume& other) const {
  return width_ == other.width_ && height_ == other.height_ &&
         binning_ == other.binning_;
}

bool ProbabilityVolume::is_valid(double tol) const {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    double sum = 0.0;
    for (double p : ray(i)) {
      if (!(p >= 0.0) || !std::isfinite(p)) return false;
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

void normalize_ray(std::span<double> ray) {
  const double sum = std::accumulate(ray.begin(), ray.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::fill(ray.begin(), ray.end(), 1.0 / static_cast<double>(ray.size()));
    return;
  }
  const double inv = 1.0 / sum;
  for (double& p : ray) p *= inv;
}

ProbabilityVolume uniform_volume(int width, int height, const DepthBinning& binning) {
  ProbabilityVolume vol(width, height, binning);
  std::fill(vol.data().begin(), vol.data().end(), 1.0 / binning.k_count());
  return vol;
}

void fuse_into(ProbabilityVolume& keyframe_vol, const ProbabilityVolume& new_vol) {
  require_same_layout(keyframe_vol, new_vol);
  for (std::size_t i = 0; i < keyframe_vol.pixel_count(); ++i) {
    auto out = keyframe_vol.ray(i);
    const auto in = new_vol.ray(i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= in[k];
    normalize_ray(out);
  }
}

ProbabilityVolume fuse(const ProbabilityVolume& keyframe_vol,
                       const ProbabilityVolume& new_vol) {
  ProbabilityVolume out = keyframe_vol;
  fuse_into(out, new_vol);
  return out;
}

void PriorModel::validate() const {
  if (!(sigma_bins > 0.0) || !(uniform_floor >= 0.0 && uniform_floor <= 1.0) ||
      !(spurious_mode_prob >= 0.0 && spurious_mode_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidRange, "invalid prior model parameters");
  }
}

ProbabilityVolume synth_prior(const DepthMap& gt_depth, const PriorModel& model,
                              const DepthBinning& binning) {
  model.validate();
  ProbabilityVolume vol(gt_depth.width(), gt_depth.height(), binning);
  const int kc = binning.k_count();
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> bump(kc);
  std::vector<double> spurious(kc);

  auto fill_bump = [&](std::vector<double>& out, double center) {
    const double inv_two_var = 1.0 / (2.0 * model.sigma_bins * model.sigma_bins);
    for (int k = 0; k < kc; ++k) {
      const double dk = k - center;
      out[k] = std::exp(-dk * dk * inv_two_var);
    }
    normalize_ray(out);
  };

  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    // Draws happen for every pixel so the stream does not depend on validity.
    const double spurious_draw = unit(rng);
    const double sign_draw = unit(rng);
    const double weight_draw = unit(rng);
    auto ray = vol.ray(i);
    const double gt = gt_depth[i];
    if (!is_valid_depth(gt)) {
      std::fill(ray.begin(), ray.end(), 1.0 / kc);
      continue;
    }
    const int center = binning.bin_of(gt);
    fill_bump(bump, center);
    double main_weight = 1.0;
    if (spurious_draw < model.spurious_mode_prob) {
      const double offset = sign_draw < 0.5 ? -model.spurious_offset_bins
                                            : model.spurious_offset_bins;
      const double other = std::clamp(center + offset, 0.0, kc - 1.0);
      fill_bump(spurious, other);
      // The spurious mode takes between a quarter and three quarters of the peaked mass.
      main_weight = 0.75 - 0.5 * weight_draw;
    }
    const double peaked = 1.0 - model.uniform_floor;
    for (int k = 0; k < kc; ++k) {
      double p = main_weight * bump[k];
      if (main_weight < 1.0) p += (1.0 - main_weight) * spurious[k];
      ray[k] = peaked * p + model.uniform_floor / kc;
    }
    normalize_ray(ray);
  }
  return vol;
}

double ordinal_loss(const ProbabilityVolume& vol, const DepthMap& gt_depth) {
  if (!gt_depth.same_shape(vol.width(), vol.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "ground truth does not match volume");
  }
  const DepthBinning& binning = vol.binning();
  const int kc = vol.k_count();
  std::vector<double> at_least(kc);
  double loss = 0.0;
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    if (!is_valid_depth(gt_depth[i])) continue;
    const auto ray = vol.ray(i);
    const int truth = binning.bin_of(gt_depth[i]);
    // P(k* >= k) from the tail; 1 - P(k* >= k) from the head so that small
    // complements are not lost to cancellation.
    double tail = 0.0;
    for (int k = kc - 1; k >= 0; --k) {
      tail += ray[k];
      at_least[k] = tail;
    }
    double head = 0.0;
    double pixel = 0.0;
    for (int k = 0; k < kc; ++k) {
      if (k <= truth) {
        pixel += std::log(std::max(at_least[k], kLogFloor));
      } else {
        pixel += std::log(std::max(head, kLogFloor));
      }
      head += ray[k];
    }
    loss -= pixel;
  }
  return loss;
}

DepthMap argmax_depth(const ProbabilityVolume& vol) {
  DepthMap out(vol.width(), vol.height());
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    const auto ray = vol.ray(i);
    const auto best = std::max_element(ray.begin(), ray.end());
    out[i] = vol.binning().midpoint(static_cast<int>(best - ray.begin()));
  }
  return out;
}

DepthMap expected_depth(const ProbabilityVolume& vol) {
  DepthMap out(vol.width(), vol.height());
  const auto& mids = vol.binning().midpoints();
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    const auto ray = vol.ray(i);
    out[i] = std::inner_product(ray.begin(), ray.end(), mids.begin(), 0.0);
  }
  return out;
}

}  // namespace probfuse
