#pragma once

#include <span>

namespace probfuse {

/// Gaussian kernel density over depth built from one pixel's discrete
/// distribution: f(d) = sum_k w_k N(d; c_k, sigma). Centers must be ascending.
/// Views only; the caller owns weights and centers.
struct SmoothedRay {
  std::span<const double> weights;
  std::span<const double> centers;
  double sigma = 0.1;
};

inline constexpr double kDefaultKdeSigma = 0.1;

double pdf_value(const SmoothedRay& ray, double d);
double pdf_derivative(const SmoothedRay& ray, double d);

struct CostAndGrad {
  double cost;
  double grad;
};

/// -ln f(d) and its derivative, with f floored at 1e-30.
CostAndGrad neg_log_pdf_and_grad(const SmoothedRay& ray, double d);
/// Cost only; skips the derivative accumulation.
double neg_log_pdf(const SmoothedRay& ray, double d);

}  // namespace probfuse
