#include "probfuse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "probfuse/error.hpp"

namespace probfuse {

double SolverConfig::effective_lambda() const {
  if (lambda) return *lambda;
  switch (regularizer) {
    case RegularizerKind::kNormals: return 1e7;
    case RegularizerKind::kTv: return 1e2;
    case RegularizerKind::kNone: return 0.0;
  }
  return 0.0;
}

double SolverConfig::effective_step() const {
  return regularizer == RegularizerKind::kTv ? tv_step_size : step_size;
}

void SolverConfig::validate() const {
  if (!(step_size > 0.0) || !(tv_step_size > 0.0) || max_iters < 0 ||
      !(stop_tol >= 0.0) || !(kde_sigma > 0.0) ||
      (lambda && !(*lambda >= 0.0))) {
    throw Error(ErrorCode::kInvalidConfig, "invalid solver configuration");
  }
}

namespace {

// Composite cost with the regularizer's per-pixel rays precomputed once.
class Objective {
 public:
  Objective(const CostInputs& inputs, const SolverConfig& config)
      : volume_(inputs.volume),
        centers_(inputs.volume.binning().midpoints()),
        sigma_(config.kde_sigma),
        kind_(config.regularizer),
        lambda_(config.effective_lambda()) {
    const int w = volume_.width();
    const int h = volume_.height();
    if (kind_ == RegularizerKind::kNormals) {
      if (!inputs.normals.same_shape(w, h) || !inputs.mask.same_shape(w, h)) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "normals and mask must match the volume");
      }
      normals_.emplace(inputs.normals, inputs.mask, inputs.intrinsics);
    }
  }

  SmoothedRay ray(std::size_t i) const { return {volume_.ray(i), centers_, sigma_}; }

  double cost(const DepthMap& d) const {
    double unary = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) unary += neg_log_pdf(ray(i), d[i]);
    check_finite(unary, d);
    return unary + lambda_ * regularizer(d);
  }

  double cost_and_grad(const DepthMap& d, std::vector<double>& grad) const {
    double reg = 0.0;
    switch (kind_) {
      case RegularizerKind::kNone:
        grad.assign(d.size(), 0.0);
        break;
      case RegularizerKind::kTv: {
        EnergyAndGrad tv = tv_energy_and_grad(d);
        reg = tv.energy;
        grad = std::move(tv.grad);
        break;
      }
      case RegularizerKind::kNormals:
        reg = normals_->energy_and_grad(d, grad);
        break;
    }
    double unary = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const CostAndGrad cg = neg_log_pdf_and_grad(ray(i), d[i]);
      unary += cg.cost;
      grad[i] = cg.grad + lambda_ * grad[i];
    }
    check_finite(unary, d);
    return unary + lambda_ * reg;
  }

 private:
  double regularizer(const DepthMap& d) const {
    switch (kind_) {
      case RegularizerKind::kNone: return 0.0;
      case RegularizerKind::kTv: return tv_energy(d);
      case RegularizerKind::kNormals: return normals_->energy(d);
    }
    return 0.0;
  }

  void check_finite(double unary, const DepthMap& d) const {
    if (std::isfinite(unary)) return;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!std::isfinite(neg_log_pdf(ray(i), d[i]))) {
        std::ostringstream msg;
        msg << "non-finite cost at pixel (" << i % d.width() << ", " << i / d.width()
            << ") depth " << d[i];
        throw Error(ErrorCode::kNonFiniteCost, msg.str());
      }
    }
    throw Error(ErrorCode::kNonFiniteCost, "non-finite total cost");
  }

  const ProbabilityVolume& volume_;
  std::span<const double> centers_;
  double sigma_;
  RegularizerKind kind_;
  double lambda_;
  std::optional<NormalTerm> normals_;
};

}  // namespace

double total_cost(const DepthMap& d, const CostInputs& inputs, const SolverConfig& config) {
  config.validate();
  if (!d.same_shape(inputs.volume.width(), inputs.volume.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "depth map does not match the volume");
  }
  return Objective(inputs, config).cost(d);
}

SolverResult extract_depth(const CostInputs& inputs, const SolverConfig& config) {
  config.validate();
  const ProbabilityVolume& vol = inputs.volume;
  const Objective objective(inputs, config);
  const double lo = config.clamp_min.value_or(vol.binning().d_min());
  const double hi = config.clamp_max.value_or(vol.binning().d_max());

  SolverResult result;
  DepthMap& d = result.depth;
  d = config.init == InitKind::kArgmax ? argmax_depth(vol) : expected_depth(vol);
  for (double& v : d.values()) v = std::clamp(v, lo, hi);
  SolverDiagnostics& diag = result.diagnostics;

  std::vector<double> grad;
  std::vector<double> trial_grad;
  double cost = objective.cost_and_grad(d, grad);
  diag.cost_trace.push_back(cost);
  const double max_step = config.effective_step();
  double step = max_step;
  DepthMap trial = d;

  // Cost and gradient at d - s * grad, clamped to the depth range.
  auto try_step = [&](double s) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      trial[i] = std::clamp(d[i] - s * grad[i], lo, hi);
    }
    return objective.cost_and_grad(trial, trial_grad);
  };

  for (int it = 0; it < config.max_iters; ++it) {
    double trial_cost = try_step(step);
    if (config.backtracking) {
      // Halve until the step no longer increases the cost; give up once it
      // is too small to change any depth.
      int halvings = 0;
      while (trial_cost > cost && halvings < 64) {
        step *= 0.5;
        ++halvings;
        trial_cost = try_step(step);
      }
      diag.backtracks += halvings;
      if (trial_cost > cost) break;
    }
    std::swap(d, trial);
    std::swap(grad, trial_grad);
    const double previous = cost;
    cost = trial_cost;
    diag.cost_trace.push_back(cost);
    diag.step_trace.push_back(step);
    diag.iterations = it + 1;
    const double decrease = previous - cost;
    if (decrease >= 0.0 &&
        decrease <= config.stop_tol * std::max(std::abs(previous), 1e-300)) {
      break;
    }
    // Let the step recover after a backtrack, never beyond the configured one.
    if (config.backtracking) step = std::min(2.0 * step, max_step);
  }

  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  diag.final_grad_norm = std::sqrt(norm2);
  return result;
}

void write_cost_trace(std::ostream& out, const SolverDiagnostics& diagnostics) {
  out << std::setw(9) << "iteration" << "  " << std::setw(22) << "cost" << "  "
      << std::setw(14) << "step" << '\n';
  for (std::size_t i = 0; i < diagnostics.cost_trace.size(); ++i) {
    out << std::setw(9) << i << "  " << std::setw(22) << std::setprecision(15)
        << diagnostics.cost_trace[i] << "  " << std::setw(14) << std::setprecision(6);
    if (i == 0) {
      out << "-";
    } else {
      out << diagnostics.step_trace[i - 1];
    }
    out << '\n';
  }
}

}  // namespace probfuse
