#include "probfuse/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace probfuse {

namespace {

constexpr double kDensityFloor = 1e-30;
// Truncating at 7 sigma loses about 3e-12 of each kernel's mass.
constexpr double kCutoffSigmas = 7.0;

struct Density {
  double value;
  double derivative;
};

template <bool kWithDerivative>
Density evaluate(const SmoothedRay& ray, double d) {
  const double reach = kCutoffSigmas * ray.sigma;
  const auto first = std::lower_bound(ray.centers.begin(), ray.centers.end(), d - reach);
  const auto last = std::upper_bound(first, ray.centers.end(), d + reach);
  const double inv_sigma = 1.0 / ray.sigma;
  const double norm = inv_sigma / std::sqrt(2.0 * std::numbers::pi);
  double value = 0.0;
  double derivative = 0.0;
  for (auto it = first; it != last; ++it) {
    const std::size_t k = static_cast<std::size_t>(it - ray.centers.begin());
    const double w = ray.weights[k];
    if (w == 0.0) continue;
    const double z = (*it - d) * inv_sigma;
    const double kernel = w * norm * std::exp(-0.5 * z * z);
    value += kernel;
    if constexpr (kWithDerivative) derivative += kernel * z * inv_sigma;
  }
  return {value, derivative};
}

}  // namespace

double pdf_value(const SmoothedRay& ray, double d) {
  return evaluate<false>(ray, d).value;
}

double pdf_derivative(const SmoothedRay& ray, double d) {
  return evaluate<true>(ray, d).derivative;
}

CostAndGrad neg_log_pdf_and_grad(const SmoothedRay& ray, double d) {
  const Density f = evaluate<true>(ray, d);
  const double floored = std::max(f.value, kDensityFloor);
  return {-std::log(floored), -f.derivative / floored};
}

double neg_log_pdf(const SmoothedRay& ray, double d) {
  return -std::log(std::max(evaluate<false>(ray, d).value, kDensityFloor));
}

}  // namespace probfuse
