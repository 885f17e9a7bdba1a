#include "probfuse/regularizer.hpp"

#include <cmath>
#include <sstream>

#include "probfuse/error.hpp"

namespace probfuse {

OcclusionMask mask_from_boundary_prob(const BoundaryProbMap& prob_map, double threshold) {
  OcclusionMask mask(prob_map.width(), prob_map.height(), 1);
  for (std::size_t i = 0; i < prob_map.size(); ++i) {
    const double p = prob_map[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream msg;
      msg << "boundary probability " << p << " at pixel " << i << " outside [0, 1]";
      throw Error(ErrorCode::kOutOfRange, msg.str());
    }
    mask[i] = p > threshold ? 0 : 1;
  }
  return mask;
}

NormalTerm::NormalTerm(const NormalMap& normals, const OcclusionMask& mask,
                       const Intrinsics& intrinsics)
    : width_(normals.width()), height_(normals.height()) {
  if (!mask.same_shape(normals) || intrinsics.width != width_ ||
      intrinsics.height != height_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "normals, mask and intrinsics must share dimensions");
  }
  coeffs_.assign(normals.size(), Eigen::Vector3d::Zero());
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = normals.index(x, y);
      if (mask[i] == 0) continue;
      const Eigen::Vector3d& n = normals[i];
      coeffs_[i] = {n.dot(pixel_ray(intrinsics, x, y)),
                    n.dot(pixel_ray(intrinsics, x + 1, y)),
                    n.dot(pixel_ray(intrinsics, x, y + 1))};
    }
  }
}

double NormalTerm::energy(const DepthMap& d) const {
  double energy = 0.0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = d.index(x, y);
      const Eigen::Vector3d& c = coeffs_[i];
      if (x + 1 < width_) {
        const double r = c[0] * d[i] - c[1] * d[i + 1];
        energy += r * r;
      }
      if (y + 1 < height_) {
        const double r = c[0] * d[i] - c[2] * d[i + width_];
        energy += r * r;
      }
    }
  }
  return energy;
}

double NormalTerm::energy_and_grad(const DepthMap& d, std::vector<double>& grad) const {
  grad.assign(d.size(), 0.0);
  double energy = 0.0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = d.index(x, y);
      const Eigen::Vector3d& c = coeffs_[i];
      if (x + 1 < width_) {
        const double r = c[0] * d[i] - c[1] * d[i + 1];
        energy += r * r;
        grad[i] += 2.0 * r * c[0];
        grad[i + 1] -= 2.0 * r * c[1];
      }
      if (y + 1 < height_) {
        const std::size_t j = i + width_;
        const double r = c[0] * d[i] - c[2] * d[j];
        energy += r * r;
        grad[i] += 2.0 * r * c[0];
        grad[j] -= 2.0 * r * c[2];
      }
    }
  }
  return energy;
}

EnergyAndGrad normal_energy_and_grad(const DepthMap& d, const NormalMap& normals,
                                     const OcclusionMask& mask,
                                     const Intrinsics& intrinsics) {
  if (!d.same_shape(normals)) {
    throw Error(ErrorCode::kDimensionMismatch, "depth and normals differ in size");
  }
  const NormalTerm term(normals, mask, intrinsics);
  EnergyAndGrad out;
  out.energy = term.energy_and_grad(d, out.grad);
  return out;
}

namespace {

template <bool kWithGrad>
double tv_impl(const DepthMap& d, double epsilon, std::vector<double>* grad) {
  const int w = d.width();
  const int h = d.height();
  if constexpr (kWithGrad) grad->assign(d.size(), 0.0);
  const double eps2 = epsilon * epsilon;
  double energy = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = d.index(x, y);
      const double gx = x + 1 < w ? d[i + 1] - d[i] : 0.0;
      const double gy = y + 1 < h ? d[i + w] - d[i] : 0.0;
      const double s = std::sqrt(gx * gx + gy * gy + eps2);
      energy += s;
      if constexpr (kWithGrad) {
        auto& g = *grad;
        g[i] -= (gx + gy) / s;
        if (x + 1 < w) g[i + 1] += gx / s;
        if (y + 1 < h) g[i + w] += gy / s;
      }
    }
  }
  return energy;
}

}  // namespace

EnergyAndGrad tv_energy_and_grad(const DepthMap& d, double epsilon) {
  EnergyAndGrad out;
  out.energy = tv_impl<true>(d, epsilon, &out.grad);
  return out;
}

double tv_energy(const DepthMap& d, double epsilon) {
  return tv_impl<false>(d, epsilon, nullptr);
}

NormalMap normals_from_depth(const DepthMap& d, const Intrinsics& intrinsics) {
  const int w = d.width();
  const int h = d.height();
  NormalMap out(w, h, Eigen::Vector3d::Zero());
  auto point = [&](int x, int y) -> Eigen::Vector3d {
    return backproject(intrinsics, x, y, d(x, y));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!is_valid_depth(d(x, y))) continue;
      // Forward differences, backward at the last row/column.
      const int xn = x + 1 < w ? x + 1 : x - 1;
      const int yn = y + 1 < h ? y + 1 : y - 1;
      if (xn < 0 || yn < 0 || !is_valid_depth(d(xn, y)) || !is_valid_depth(d(x, yn))) {
        continue;
      }
      const Eigen::Vector3d p = point(x, y);
      const Eigen::Vector3d tx = (point(xn, y) - p) * (xn > x ? 1.0 : -1.0);
      const Eigen::Vector3d ty = (point(x, yn) - p) * (yn > y ? 1.0 : -1.0);
      Eigen::Vector3d n = tx.cross(ty);
      const double norm = n.norm();
      if (!(norm > 0.0)) continue;
      n /= norm;
      if (n.dot(p) > 0.0) n = -n;
      out(x, y) = n;
    }
  }
  return out;
}

BoundaryProbMap boundary_prob_from_depth(const DepthMap& d, double relative_jump) {
  const int w = d.width();
  const int h = d.height();
  BoundaryProbMap out(w, h, 0.0);
  auto jump = [&](int x0, int y0, int x1, int y1) {
    const double a = d(x0, y0);
    const double b = d(x1, y1);
    if (!is_valid_depth(a) || !is_valid_depth(b)) return true;
    return std::abs(a - b) > relative_jump * std::min(a, b);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && jump(x, y, x + 1, y)) out(x, y) = out(x + 1, y) = 1.0;
      if (y + 1 < h && jump(x, y, x, y + 1)) out(x, y) = out(x, y + 1) = 1.0;
    }
  }
  return out;
}

}  // namespace probfuse
