#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "probfuse/kde.hpp"

namespace probfuse::testing {

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Integral of a KDE over the real line. Outside [c_0 - 12 sigma, c_K + 12 sigma]
/// every kernel is below 1e-31, so the tails are dropped.
inline double kde_integral(const SmoothedRay& ray) {
  const double a = ray.centers.front() - 12.0 * ray.sigma;
  const double b = ray.centers.back() + 12.0 * ray.sigma;
  const int n = 2 * static_cast<int>(std::ceil((b - a) / (ray.sigma / 100.0) / 2.0));
  return simpson([&](double d) { return pdf_value(ray, d); }, a, b, n);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// |a - b| <= rel * max(|a|, |b|), with an absolute allowance `abs_floor`
/// for values that are zero up to rounding.
inline bool relative_match(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

/// A random distribution over `centers`, dense or with a few modes.
inline std::vector<double> random_weights(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(k, 0.0);
  if (u(rng) < 0.5) {
    for (double& v : w) v = u(rng);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const int modes = 1 + static_cast<int>(u(rng) * 3);
    for (int m = 0; m < modes; ++m) w[pick(rng)] += u(rng) + 0.1;
  }
  double s = 0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

}  // namespace probfuse::testing
