#include "ctl/boed.hpp"

#include "ctl/csv.hpp"
#include "ctl/parallel.hpp"
#include "ctl/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace ctl {

bool DesignSpace::contains(const Vector& design) const {
  if (design.size() != lower.size()) return false;
  if ((design.array() < lower.array()).any() ||
      (design.array() > upper.array()).any()) {
    return false;
  }
  if (ordered) {
    for (Eigen::Index i = 1; i < design.size(); ++i) {
      if (design[i] < design[i - 1]) return false;
    }
  }
  return true;
}

Vector DesignSpace::project(Vector design) const {
  design = design.cwiseMax(lower).cwiseMin(upper);
  if (ordered) {
    std::sort(design.data(), design.data() + design.size());
  }
  return design;
}

JsdObjectiveValue jsd_design_objective(const Simulator& sim, const PriorSpec& prior,
                                       const Vector& design, LogRatioModel& ratio,
                                       Eigen::Index n, std::uint64_t seed) {
  const JointSample joint = simulate_joint(sim, prior, design, n, sub_seed(seed, 0));
  const JointSample marginal = marginal_pairs(joint, sub_seed(seed, 1));
  const LabeledTwoSample sample = make_two_sample(joint.stacked(), marginal.stacked());

  const LossReport report = logistic_loss_with_gradient(ratio, sample);
  JsdObjectiveValue value;
  value.bound = kTwoLog2 - report.loss_value;
  value.standard_error = report.standard_error;
  value.loss_gradient = report.gradient;
  return value;
}

namespace {

struct FittedBound {
  double bound = 0.0;
  double se = 0.0;
};

FittedBound fit_ratio_at_design(const Simulator& sim, const PriorSpec& prior,
                                const Vector& design, LogRatioModel& ratio,
                                Eigen::Index n, std::uint64_t bank_seed,
                                const OptimizerConfig& optimizer) {
  const JointSample joint =
      simulate_joint(sim, prior, design, n, sub_seed(bank_seed, 0));
  const JointSample marginal = marginal_pairs(joint, sub_seed(bank_seed, 1));
  const LabeledTwoSample sample = make_two_sample(joint.stacked(), marginal.stacked());

  const Objective objective = [&](const Vector& w, Vector& grad) {
    ratio.set_parameters(w);
    const LossReport r = logistic_loss_with_gradient(ratio, sample);
    grad = r.gradient;
    return r.loss_value;
  };
  const OptimResult res = minimise(objective, ratio.parameters(), optimizer);
  if (res.diverged) {
    throw std::runtime_error("concurrent_design_optimise: ratio fit diverged");
  }
  ratio.set_parameters(res.argmin);
  const LossReport final_report = logistic_loss(ratio, sample);
  return {kTwoLog2 - final_report.loss_value, final_report.standard_error};
}

MiTrace grid_refit_optimise(const Simulator& sim, const PriorSpec& prior,
                            const DesignSpace& space, const RatioFactory& factory,
                            const DesignOptConfig& config, std::uint64_t seed) {
  if (config.candidates.empty()) {
    throw std::invalid_argument("grid-refit needs a non-empty candidate list");
  }
  MiTrace trace;
  // One seed for every candidate: common random numbers across designs.
  const std::uint64_t bank_seed = sub_seed(seed, 17);

  double best_bound = -std::numeric_limits<double>::infinity();
  int iteration = 0;
  for (const Vector& candidate : config.candidates) {
    if (!space.contains(candidate)) {
      throw std::invalid_argument("grid-refit: candidate design outside the design space");
    }
    if (trace.simulations_used + config.n_per_evaluation > config.simulation_budget) {
      break;
    }
    auto ratio = factory();
    const FittedBound fb = fit_ratio_at_design(sim, prior, candidate, *ratio,
                                               config.n_per_evaluation, bank_seed,
                                               config.ratio_optimizer);
    trace.simulations_used += config.n_per_evaluation;
    trace.rows.push_back({iteration++, candidate, fb.bound, fb.se});
    if (fb.bound > best_bound) {
      best_bound = fb.bound;
      trace.final_design = candidate;
      trace.final_bound = fb.bound;
      trace.final_standard_error = fb.se;
      trace.final_model = std::shared_ptr<LogRatioModel>(std::move(ratio));
    }
  }
  if (trace.rows.empty()) {
    throw std::runtime_error(
        "concurrent_design_optimise: simulation budget exhausted before any "
        "complete evaluation");
  }
  return trace;
}

MiTrace alternating_ascent_optimise(const Simulator& sim, const PriorSpec& prior,
                                    const DesignSpace& space, const RatioFactory& factory,
                                    const DesignOptConfig& config, std::uint64_t seed) {
  Vector design = config.initial_design.size() > 0
                      ? config.initial_design
                      : ((space.lower + space.upper) / 2.0).eval();
  if (!space.contains(design)) {
    throw std::invalid_argument("alternating-ascent: initial design outside the space");
  }
  auto ratio = factory();

  MiTrace trace;
  const int q = space.dim();
  const long per_iteration = config.n_per_evaluation * (1 + 2 * long(q));
  double best_bound = -std::numeric_limits<double>::infinity();

  for (int t = 0; t < config.ascent_iterations; ++t) {
    if (trace.simulations_used + per_iteration > config.simulation_budget) {
      break;
    }
    // Fresh common-random-number banks per iteration, shared by the
    // centre and probe evaluations.
    const std::uint64_t iter_seed = sub_seed(seed, 100 + std::uint64_t(t));

    const FittedBound fb =
        fit_ratio_at_design(sim, prior, design, *ratio, config.n_per_evaluation,
                            iter_seed, config.ratio_optimizer);
    trace.simulations_used += per_iteration;
    trace.rows.push_back({t, design, fb.bound, fb.se});
    if (fb.bound > best_bound) {
      best_bound = fb.bound;
      trace.final_design = design;
      trace.final_bound = fb.bound;
      trace.final_standard_error = fb.se;
      trace.final_model = std::shared_ptr<LogRatioModel>(ratio->clone().release());
    }

    // Finite-difference ascent on the bound with the ratio held fixed.
    Vector ascent(q);
    for (int k = 0; k < q; ++k) {
      Vector plus = design;
      Vector minus = design;
      plus[k] = std::min(plus[k] + config.ascent_fd_delta, space.upper[k]);
      minus[k] = std::max(minus[k] - config.ascent_fd_delta, space.lower[k]);
      const double width = plus[k] - minus[k];
      if (width <= 0.0) {
        ascent[k] = 0.0;
        continue;
      }
      const double b_plus =
          jsd_design_objective(sim, prior, plus, *ratio, config.n_per_evaluation,
                               iter_seed)
              .bound;
      const double b_minus =
          jsd_design_objective(sim, prior, minus, *ratio, config.n_per_evaluation,
                               iter_seed)
              .bound;
      ascent[k] = (b_plus - b_minus) / width;
    }
    const double norm = ascent.norm();
    if (norm > 0.0) {
      design = space.project(design + config.ascent_step * ascent / norm);
    }
  }
  if (trace.rows.empty()) {
    throw std::runtime_error(
        "concurrent_design_optimise: simulation budget exhausted before any "
        "complete evaluation");
  }
  return trace;
}

}  // namespace

MiTrace concurrent_design_optimise(const Simulator& sim, const PriorSpec& prior,
                                   const DesignSpace& space, const RatioFactory& factory,
                                   const DesignOptConfig& config, std::uint64_t seed) {
  switch (config.strategy) {
    case DesignStrategy::GridRefit:
      return grid_refit_optimise(sim, prior, space, factory, config, seed);
    case DesignStrategy::AlternatingAscent:
      return alternating_ascent_optimise(sim, prior, space, factory, config, seed);
  }
  throw std::logic_error("concurrent_design_optimise: unknown strategy");
}

MiEstimate nested_mc_mi_oracle(const AnalyticConditionalSimulator& sim,
                               const PriorSpec& prior, const Vector& design,
                               Eigen::Index n_outer, Eigen::Index n_inner,
                               std::uint64_t seed) {
  if (n_outer < 2 || n_inner < 1) {
    throw std::invalid_argument("nested_mc_mi_oracle: need n_outer >= 2, n_inner >= 1");
  }
  const JointSample joint = simulate_joint(sim, prior, design, n_outer, sub_seed(seed, 0));
  const Matrix inner = prior.sample(n_inner, sub_seed(seed, 1));

  Vector terms(n_outer);
  parallel_for(n_outer, [&](Eigen::Index j) {
    const Vector x_j = joint.x.row(j).transpose();
    const Vector theta_j = joint.theta.row(j).transpose();
    const double cond = sim.conditional_log_density(x_j, theta_j, design);
    Vector inner_logs(n_inner);
    for (Eigen::Index k = 0; k < n_inner; ++k) {
      inner_logs[k] =
          sim.conditional_log_density(x_j, inner.row(k).transpose(), design);
    }
    const double marginal = logsumexp(inner_logs) - std::log(double(n_inner));
    terms[j] = cond - marginal;
  });

  const MeanWithSe stats = mean_with_se(terms);
  return {stats.mean, stats.se, n_outer, n_inner};
}

MiEstimate nested_mc_mi_oracle(const Simulator& sim, const PriorSpec& prior,
                               const Vector& design,
                               const std::function<long(const Vector&)>& binning,
                               Eigen::Index n_outer, Eigen::Index n_inner,
                               std::uint64_t seed) {
  if (n_outer < 2 || n_inner < 2) {
    throw std::invalid_argument("nested_mc_mi_oracle: need n_outer >= 2, n_inner >= 2");
  }
  const Matrix thetas = prior.sample(n_outer, sub_seed(seed, 0));

  // all_bins[j * n_inner + i] is the bin of draw i at theta_j; draw 0
  // doubles as the outer observation x_j (leave-in, so its conditional
  // and marginal frequencies are always positive).
  std::vector<long> all_bins(std::size_t(n_outer) * std::size_t(n_inner));
  parallel_for(n_outer, [&](Eigen::Index j) {
    const Vector theta_j = thetas.row(j).transpose();
    for (Eigen::Index i = 0; i < n_inner; ++i) {
      const Vector obs = sim.run(
          theta_j, design,
          sub_seed(seed, 1 + std::uint64_t(j) * 0x10000 + std::uint64_t(i)));
      all_bins[std::size_t(j) * std::size_t(n_inner) + std::size_t(i)] = binning(obs);
    }
  });

  std::unordered_map<long, long> pooled;
  pooled.reserve(1024);
  for (long bin : all_bins) {
    pooled[bin] += 1;
  }

  Vector terms(n_outer);
  for (Eigen::Index j = 0; j < n_outer; ++j) {
    const long* row = all_bins.data() + std::size_t(j) * std::size_t(n_inner);
    const long obs_bin = row[0];
    long cond_count = 0;
    for (Eigen::Index i = 0; i < n_inner; ++i) {
      cond_count += row[i] == obs_bin ? 1 : 0;
    }
    // log[ (cond_count/n_inner) / (pooled/(n_outer n_inner)) ]
    terms[j] = std::log(double(cond_count) * double(n_outer) /
                        double(pooled.at(obs_bin)));
  }

  const MeanWithSe stats = mean_with_se(terms);
  return {stats.mean, stats.se, n_outer, n_inner};
}

std::function<long(const Vector&)> fraction_binning(int bins_per_axis) {
  if (bins_per_axis < 1) {
    throw std::invalid_argument("fraction_binning: need at least one bin");
  }
  return [bins_per_axis](const Vector& obs) {
    long bin = 0;
    long scale = 1;
    for (Eigen::Index k = 0; k < obs.size(); ++k) {
      auto digit = long(std::floor(obs[k] * double(bins_per_axis)));
      digit = std::min<long>(std::max<long>(digit, 0), bins_per_axis - 1);
      bin += digit * scale;
      scale *= bins_per_axis;
    }
    return bin;
  };
}

PosteriorGrid posterior_at_design(const LogRatioModel& ratio, const PriorSpec& prior,
                                  const Vector& x_obs,
                                  const std::vector<int>& resolution) {
  return posterior_from_ratio(ratio, prior, x_obs, resolution);
}

void write_mi_trace_csv(const std::string& path, const MiTrace& trace) {
  const auto q = trace.final_design.size();
  std::vector<std::string> header{"iteration"};
  for (Eigen::Index k = 0; k < q; ++k) {
    header.push_back("design_" + std::to_string(k));
  }
  header.push_back("bound");
  header.push_back("standard_error");
  CsvWriter csv(path, header);
  for (const auto& row : trace.rows) {
    std::vector<std::string> cells{std::to_string(row.iteration)};
    for (Eigen::Index k = 0; k < q; ++k) {
      cells.push_back(format_double(row.design[k]));
    }
    cells.push_back(format_double(row.bound));
    cells.push_back(format_double(row.standard_error));
    csv.write_row(cells);
  }
}

}  // namespace ctl
