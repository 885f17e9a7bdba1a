#pragma once

#include <array>
#include <cmath>

#include "probfuse/grid.hpp"

namespace probfuse {

/// RGB in [0, 255].
using Rgb = std::array<double, 3>;
using RgbImage = Grid<Rgb>;
using GrayImage = Grid<double>;

/// Depth in metres. Zero or non-finite marks an invalid pixel (TUM convention).
using DepthMap = Grid<double>;

inline bool is_valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

/// Bilinear sample at subpixel (u, v). Caller guarantees 0 <= u <= w-1, 0 <= v <= h-1.
inline double sample_bilinear(const Grid<double>& img, double u, double v) {
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = x0 + 1 < img.width() ? x0 + 1 : x0;
  const int y1 = y0 + 1 < img.height() ? y0 + 1 : y0;
  const double ax = u - x0;
  const double ay = v - y0;
  const double top = (1.0 - ax) * img(x0, y0) + ax * img(x1, y0);
  const double bottom = (1.0 - ax) * img(x0, y1) + ax * img(x1, y1);
  return (1.0 - ay) * top + ay * bottom;
}

}  // namespace probfuse
