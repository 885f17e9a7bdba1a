#include "probfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "probfuse/error.hpp"

namespace probfuse {

EvalReport evaluate(const DepthMap& pred, const DepthMap& gt) {
  if (!pred.same_shape(gt)) {
    throw Error(ErrorCode::kDimensionMismatch, "prediction and ground truth differ in size");
  }
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double g = gt[i];
    if (!is_valid_depth(g)) continue;
    const double e = pred[i] - g;
    abs_rel += std::abs(e) / g;
    sq_rel += e * e / g;
    sq += e * e;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyValidSet, "no valid ground-truth pixels");
  const double inv = 1.0 / static_cast<double>(n);
  return {abs_rel * inv, sq_rel * inv, std::sqrt(sq * inv), n};
}

EvalReport combine(const std::vector<EvalReport>& reports) {
  EvalReport out;
  double sq = 0.0;
  for (const EvalReport& r : reports) {
    const double n = static_cast<double>(r.valid_pixel_count);
    out.l1_rel += r.l1_rel * n;
    out.l2_rel += r.l2_rel * n;
    sq += r.rmse * r.rmse * n;
    out.valid_pixel_count += r.valid_pixel_count;
  }
  if (out.valid_pixel_count == 0) {
    throw Error(ErrorCode::kEmptyValidSet, "no reports to combine");
  }
  const double inv = 1.0 / static_cast<double>(out.valid_pixel_count);
  out.l1_rel *= inv;
  out.l2_rel *= inv;
  out.rmse = std::sqrt(sq * inv);
  return out;
}

void write_table(std::ostream& out, const std::vector<ReportRow>& rows) {
  std::size_t group_w = 8;
  std::size_t system_w = 6;
  for (const ReportRow& r : rows) {
    group_w = std::max(group_w, r.group.size());
    system_w = std::max(system_w, r.system.size());
  }
  const auto flags = out.flags();
  out << std::left << std::setw(static_cast<int>(group_w)) << "Sequence" << "  "
      << std::setw(static_cast<int>(system_w)) << "System" << std::right << "  "
      << std::setw(8) << "L1-rel" << "  " << std::setw(8) << "L2-rel" << "  "
      << std::setw(8) << "RMSE" << '\n';
  std::string previous;
  for (const ReportRow& r : rows) {
    const std::string group = r.group == previous ? "" : r.group;
    previous = r.group;
    out << std::left << std::setw(static_cast<int>(group_w)) << group << "  "
        << std::setw(static_cast<int>(system_w)) << r.system << std::right << std::fixed
        << std::setprecision(3) << "  " << std::setw(8) << r.report.l1_rel << "  "
        << std::setw(8) << r.report.l2_rel << "  " << std::setw(8) << r.report.rmse
        << '\n';
  }
  out.flags(flags);
}

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  const auto flags = out.flags();
  out << "sequence,system,l1_rel,l2_rel,rmse,valid_pixels\n";
  out << std::setprecision(9);
  for (const ReportRow& r : rows) {
    out << r.group << ',' << r.system << ',' << r.report.l1_rel << ','
        << r.report.l2_rel << ',' << r.report.rmse << ',' << r.report.valid_pixel_count
        << '\n';
  }
  out.flags(flags);
}

}  // namespace probfuse
