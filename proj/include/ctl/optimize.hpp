#pragma once

#include "ctl/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ctl {

enum class OptimMethod { GradientDescent, NormalizedGradientDescent };

struct OptimizerConfig {
  OptimMethod method = OptimMethod::GradientDescent;
  double step_size = 1.0;          // initial (GD) or fixed (NGD) step
  bool line_search = true;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  int divergence_patience = 10;    // consecutive increases before giving up
  std::uint64_t seed = 0;          // reserved; no stochastic subsampling by default
};

struct TracePoint {
  double value = 0.0;
  double gradient_norm = 0.0;
};

struct OptimResult {
  Vector argmin;
  std::vector<TracePoint> trace;   // one entry per iteration, including iteration 0
  bool converged = false;          // gradient tolerance reached
  bool diverged = false;           // objective kept increasing
  std::string stop_reason;
  double final_value = 0.0;
};

// Objective contract: return the value at w and fill `grad`.
using Objective = std::function<double(const Vector& w, Vector& grad)>;

// Full-batch first-order minimisation. With line search the value trace
// is non-increasing; without it, `divergence_patience` consecutive
// increases stop the run with diverged = true and the last good state.
OptimResult minimise(const Objective& objective, const Vector& init,
                     const OptimizerConfig& config);

// Max over coordinates of |central difference - analytic| relative to
// the larger gradient max-norm.
double finite_difference_check(const Objective& objective, const Vector& point,
                               double step = 1e-6);

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace);

}  // namespace ctl
