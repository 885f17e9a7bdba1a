#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "probfuse/geometry.hpp"
#include "probfuse/image.hpp"
#include "probfuse/kde.hpp"
#include "probfuse/regularizer.hpp"
#include "probfuse/volume.hpp"

namespace probfuse {

enum class RegularizerKind { kNone, kTv, kNormals };
enum class InitKind { kArgmax, kExpected };

struct SolverConfig {
  int max_iters = 100;
  /// Step for the normals and none regularizers.
  double step_size = 0.2;
  /// Step for the total-variation regularizer.
  double tv_step_size = 0.05;
  /// Unset means 1e7 for normals, 1e2 for TV.
  std::optional<double> lambda;
  RegularizerKind regularizer = RegularizerKind::kNormals;
  InitKind init = InitKind::kArgmax;
  /// Stop once the relative cost decrease of an accepted step drops below this.
  double stop_tol = 1e-6;
  /// Halve the step while it would increase the cost. Off reproduces plain
  /// fixed-step descent.
  bool backtracking = true;
  double kde_sigma = kDefaultKdeSigma;
  /// Unset means the binning range.
  std::optional<double> clamp_min;
  std::optional<double> clamp_max;

  double effective_lambda() const;
  double effective_step() const;
  void validate() const;
};

struct SolverDiagnostics {
  int iterations = 0;
  /// Cost at the initialisation followed by the cost after each accepted step.
  std::vector<double> cost_trace;
  /// Step length used by each accepted iteration.
  std::vector<double> step_trace;
  double final_grad_norm = 0.0;
  int backtracks = 0;
};

struct SolverResult {
  DepthMap depth;
  SolverDiagnostics diagnostics;
};

/// Inputs to the composite cost. Normals and mask may be empty unless the
/// normals regularizer is selected.
struct CostInputs {
  const ProbabilityVolume& volume;
  const NormalMap& normals;
  const OcclusionMask& mask;
  const Intrinsics& intrinsics;
};

/// Sum over pixels of -ln f_i(d_i) plus lambda times the selected regularizer.
double total_cost(const DepthMap& d, const CostInputs& inputs, const SolverConfig& config);

/// Gradient descent on total_cost from the argmax or expected depth, with
/// depths clamped to the binning range. Throws kDimensionMismatch and kNonFiniteCost.
SolverResult extract_depth(const CostInputs& inputs, const SolverConfig& config);

/// Plain-text table: iteration, cost, step.
void write_cost_trace(std::ostream& out, const SolverDiagnostics& diagnostics);

}  // namespace probfuse
