#pragma once

#include "ctl/sbi.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ctl {

// Design constraint box with an optional non-decreasing ordering
// requirement (measurement times).
struct DesignSpace {
  Vector lower;
  Vector upper;
  bool ordered = false;

  int dim() const { return int(lower.size()); }
  bool contains(const Vector& design) const;
  Vector project(Vector design) const;  // clip to box, sort if ordered
};

struct JsdObjectiveValue {
  double bound = 0.0;          // 2 log 2 - J(h)
  double standard_error = 0.0;
  Vector loss_gradient;        // gradient of J w.r.t. ratio parameters
};

// Variational JSD lower bound at a design: joint pairs (x, theta) play
// the data role, shuffled pairs the reference role (nu = 1). Re-running
// with the same seed reproduces the banks bit for bit.
JsdObjectiveValue jsd_design_objective(const Simulator& sim, const PriorSpec& prior,
                                       const Vector& design, LogRatioModel& ratio,
                                       Eigen::Index n, std::uint64_t seed);

enum class DesignStrategy { GridRefit, AlternatingAscent };

struct DesignOptConfig {
  DesignStrategy strategy = DesignStrategy::GridRefit;
  Eigen::Index n_per_evaluation = 5000;
  long simulation_budget = 10'000'000;
  OptimizerConfig ratio_optimizer;

  std::vector<Vector> candidates;  // grid-refit: designs to score

  int ascent_iterations = 25;      // alternating-ascent controls
  double ascent_step = 0.2;
  double ascent_fd_delta = 0.05;
  Vector initial_design;
};

struct MiTraceRow {
  int iteration = 0;
  Vector design;
  double bound = 0.0;
  double standard_error = 0.0;
};

struct MiTrace {
  std::vector<MiTraceRow> rows;
  Vector final_design;
  double final_bound = 0.0;
  double final_standard_error = 0.0;
  std::shared_ptr<LogRatioModel> final_model;
  long simulations_used = 0;
};

using RatioFactory = std::function<std::unique_ptr<LogRatioModel>()>;

// Concurrent maximisation of the JSD bound over (h, d). Grid-refit fits
// a fresh ratio per candidate design on common-random-number banks and
// keeps the best; alternating-ascent interleaves ratio refits with
// finite-difference ascent steps on the design.
MiTrace concurrent_design_optimise(const Simulator& sim, const PriorSpec& prior,
                                   const DesignSpace& space, const RatioFactory& factory,
                                   const DesignOptConfig& config, std::uint64_t seed);

struct MiEstimate {
  double mi = 0.0;
  double standard_error = 0.0;
  Eigen::Index n_outer = 0;
  Eigen::Index n_inner = 0;
};

// Nested Monte Carlo mutual information with the analytic conditional
// density; upward-biased for finite n_inner.
MiEstimate nested_mc_mi_oracle(const AnalyticConditionalSimulator& sim,
                               const PriorSpec& prior, const Vector& design,
                               Eigen::Index n_outer, Eigen::Index n_inner,
                               std::uint64_t seed);

// Discretised-observation variant: observations are coarsened by
// `binning` and both conditional and marginal bin masses are estimated
// by leave-in frequencies. Upward-biased for finite n_inner.
MiEstimate nested_mc_mi_oracle(const Simulator& sim, const PriorSpec& prior,
                               const Vector& design,
                               const std::function<long(const Vector&)>& binning,
                               Eigen::Index n_outer, Eigen::Index n_inner,
                               std::uint64_t seed);

// Coarsens a vector of [0, 1] fractions to a composite bin index with
// `bins_per_axis` levels per coordinate.
std::function<long(const Vector&)> fraction_binning(int bins_per_axis);

// Grid posterior over theta from the ratio fitted at the chosen design.
PosteriorGrid posterior_at_design(const LogRatioModel& ratio, const PriorSpec& prior,
                                  const Vector& x_obs, const std::vector<int>& resolution);

void write_mi_trace_csv(const std::string& path, const MiTrace& trace);

}  // namespace ctl
