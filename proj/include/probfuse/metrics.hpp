#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "probfuse/image.hpp"

namespace probfuse {

struct EvalReport {
  double l1_rel = 0.0;
  double l2_rel = 0.0;
  double rmse = 0.0;
  std::size_t valid_pixel_count = 0;
};

/// Eigen-style depth errors over pixels with valid ground truth:
/// mean |p-g|/g, mean (p-g)^2/g, sqrt(mean (p-g)^2).
/// Throws kDimensionMismatch, kEmptyValidSet.
EvalReport evaluate(const DepthMap& pred, const DepthMap& gt);

/// Pixel-count-weighted combination of several reports.
EvalReport combine(const std::vector<EvalReport>& reports);

/// One labelled row of an ablation table.
struct ReportRow {
  std::string group;   // e.g. sequence name
  std::string system;  // e.g. "Fused"
  EvalReport report;
};

void write_table(std::ostream& out, const std::vector<ReportRow>& rows);
void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace probfuse
