#include "ctl/experiments.hpp"

#include "ctl/csv.hpp"
#include "ctl/distributions.hpp"
#include "ctl/parallel.hpp"
#include "ctl/quadrature.hpp"
#include "ctl/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ctl {

namespace {

namespace fs = std::filesystem;

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string prepare_out_dir(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return out_dir;
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid]
                                : 0.5 * (values[mid - 1] + values[mid]);
}

OptimizerConfig default_fit_optimizer(int max_iterations) {
  OptimizerConfig opt;
  opt.method = OptimMethod::GradientDescent;
  opt.step_size = 1.0;
  opt.line_search = true;
  opt.max_iterations = max_iterations;
  opt.gradient_tolerance = 1e-6;
  return opt;
}

}  // namespace

void write_manifest(const RunContext& ctx, const std::string& experiment,
                    const nlohmann::json& config, double wall_clock_seconds) {
  nlohmann::json manifest;
  manifest["experiment"] = experiment;
  manifest["config"] = config;
  manifest["master_seed"] = ctx.seed;
  manifest["version"] = ctx.version;
  manifest["wall_clock_seconds"] = wall_clock_seconds;
  std::ofstream out(join(ctx.out_dir, "manifest.json"));
  if (!out) {
    throw std::runtime_error("write_manifest: cannot write to " + ctx.out_dir);
  }
  out << manifest.dump(2) << "\n";
}

FigLoglikSummary run_fig_loglik(const FigLoglikConfig& config, const RunContext& ctx) {
  const WallClock clock;
  prepare_out_dir(ctx.out_dir);
  if (config.grid_points < 1 || !(config.grid_hi >= config.grid_lo) ||
      !(config.grid_lo > 0.0)) {
    throw std::invalid_argument("fig-loglik: bad sigma grid");
  }

  const DiagonalGaussian truth = DiagonalGaussian::isotropic(1, 0.0, config.sigma_true);
  const Vector data = truth.sample(config.n, sub_seed(ctx.seed, 0)).col(0);

  FigLoglikSummary summary;
  summary.analytic_mle = std::sqrt(data.squaredNorm() / double(data.size()));
  summary.grid_step = config.grid_points > 1
                          ? (config.grid_hi - config.grid_lo) / double(config.grid_points - 1)
                          : 0.0;

  CsvWriter csv(join(ctx.out_dir, "loglik_decomposition.csv"),
                {"sigma", "partition_term", "energy_term", "total"});
  double best_total = -std::numeric_limits<double>::infinity();
  double prev_partition = std::numeric_limits<double>::infinity();
  double prev_energy = -std::numeric_limits<double>::infinity();
  summary.partition_decreasing = true;
  summary.energy_increasing = true;
  for (int i = 0; i < config.grid_points; ++i) {
    const double sigma = config.grid_points > 1
                             ? config.grid_lo + summary.grid_step * double(i)
                             : config.grid_lo;
    const LoglikDecomposition d = gaussian_loglik_decomposition(sigma, data);
    csv.row(sigma, d.partition_term, d.energy_term, d.total);
    if (d.total > best_total) {
      best_total = d.total;
      summary.argmax_sigma = sigma;
    }
    if (i > 0) {
      summary.partition_decreasing &= d.partition_term < prev_partition;
      summary.energy_increasing &= d.energy_term > prev_energy;
    }
    prev_partition = d.partition_term;
    prev_energy = d.energy_term;
  }

  write_manifest(ctx, "fig-loglik", config, clock.seconds());
  return summary;
}

NceExperimentSummary run_nce_experiment(const NceExperimentConfig& config,
                                        const RunContext& ctx) {
  const WallClock clock;
  prepare_out_dir(ctx.out_dir);
  if (config.replicates < 1) {
    throw std::invalid_argument("nce: need at least one replicate");
  }

  const DiagonalGaussian truth = DiagonalGaussian::isotropic(1, 0.0, config.sigma_true);
  const auto reference = std::make_shared<DiagonalGaussian>(
      DiagonalGaussian::isotropic(1, 0.0, config.q_sigma));

  NceFitConfig fit;
  fit.nu = config.nu;
  fit.optimizer = default_fit_optimizer(config.max_iterations);
  fit.optimizer.gradient_tolerance = 1e-5;

  std::vector<NceEstimate> estimates(std::size_t(config.replicates));
  parallel_for(
      config.replicates,
      [&](Eigen::Index r) {
        const Matrix data =
            truth.sample(config.n, sub_seed(ctx.seed, 1000 + std::uint64_t(r)));
        const GaussianScaleEnergy model(1, config.sigma_init);
        estimates[std::size_t(r)] = nce_fit(model, data, reference, fit,
                                            sub_seed(ctx.seed, 2000 + std::uint64_t(r)));
      },
      1);

  NceExperimentSummary summary;
  std::vector<double> gaps;
  CsvWriter csv(join(ctx.out_dir, "nce_summary.csv"),
                {"replicate", "sigma_hat", "c_hat", "final_loss", "iterations"});
  nlohmann::json fits = nlohmann::json::array();
  for (int r = 0; r < config.replicates; ++r) {
    const NceEstimate& est = estimates[std::size_t(r)];
    const double sigma_hat = est.theta_hat[0];
    summary.sigma_hats.push_back(sigma_hat);
    summary.c_hats.push_back(est.c_hat);
    gaps.push_back(std::abs(est.c_hat + std::log(gaussian_partition(sigma_hat))));
    csv.row(r, sigma_hat, est.c_hat, est.final_loss, long(est.trajectory.size()) - 1);
    fits.push_back(nlohmann::json::parse(est.to_json()));
  }
  summary.sigma_hat_median = median(summary.sigma_hats);
  summary.normalisation_gap_median = median(gaps);

  std::ofstream json_out(join(ctx.out_dir, "nce_fits.json"));
  json_out << fits.dump(2) << "\n";
  write_trace_csv(join(ctx.out_dir, "trajectory_0.csv"), estimates[0].trajectory);

  write_manifest(ctx, "nce", config, clock.seconds());
  return summary;
}

ChasmExperimentSummary run_chasm_experiment(const ChasmExperimentConfig& config,
                                            const RunContext& ctx) {
  const WallClock clock;
  prepare_out_dir(ctx.out_dir);

  ChasmConfig chasm;
  chasm.alphas = config.alphas;
  chasm.dim = config.dim;
  chasm.n = config.n;
  chasm.K = config.K;
  chasm.seeds = config.seeds;
  chasm.optimizer = default_fit_optimizer(config.max_iterations);
  chasm.optimizer.step_size = 0.5;

  ChasmExperimentSummary summary;
  summary.rows = chasm_experiment(chasm, ctx.seed);
  write_chasm_csv(join(ctx.out_dir, "chasm.csv"), summary.rows);

  summary.alphas = config.alphas;
  for (double alpha : config.alphas) {
    std::vector<double> single_err, tre_err, single_curv;
    for (const auto& row : summary.rows) {
      if (row.alpha != alpha) continue;
      if (row.method == "single") {
        single_err.push_back(row.param_error);
        single_curv.push_back(row.curvature_proxy);
      } else {
        tre_err.push_back(row.param_error);
      }
    }
    summary.single_error_median.push_back(median(single_err));
    summary.tre_error_median.push_back(median(tre_err));
    summary.single_curvature_median.push_back(median(single_curv));
  }

  write_manifest(ctx, "chasm", config, clock.seconds());
  return summary;
}

LfireExperimentSummary run_lfire_experiment(const LfireExperimentConfig& config,
                                            const RunContext& ctx) {
  const WallClock clock;
  prepare_out_dir(ctx.out_dir);

  const GaussianMeanSimulator sim(config.noise_sigma);
  const GaussianPrior prior(Vector::Zero(1), Vector::Constant(1, config.prior_sigma));

  const JointSample joint =
      simulate_joint(sim, prior, Vector(0), config.n, sub_seed(ctx.seed, 0));
  const JointSample marginal = marginal_pairs(joint, sub_seed(ctx.seed, 1));

  LinearRatioModel model(std::make_shared<QuadraticFeatureMap>(2));
  const LossReport fit_report = lfire_amortised_fit(
      joint, marginal, model, default_fit_optimizer(config.max_iterations));

  LfireExperimentSummary summary;
  summary.final_loss = fit_report.loss_value;

  // Closed-form target on the (x, theta) lattice.
  const double s2 = config.noise_sigma * config.noise_sigma;
  const double p2 = config.prior_sigma * config.prior_sigma;
  const double marg_var = s2 + p2;
  const auto true_ratio = [&](double x, double theta) {
    const double cond = -0.5 * kLog2Pi - 0.5 * std::log(s2) -
                        0.5 * (x - theta) * (x - theta) / s2;
    const double marg = -0.5 * kLog2Pi - 0.5 * std::log(marg_var) - 0.5 * x * x / marg_var;
    return cond - marg;
  };
  const int lattice = 41;
  double abs_err = 0.0;
  Vector z(2);
  for (int i = 0; i < lattice; ++i) {
    for (int j = 0; j < lattice; ++j) {
      const double x = -2.0 + 4.0 * double(i) / double(lattice - 1);
      const double theta = -2.0 + 4.0 * double(j) / double(lattice - 1);
      z << x, theta;
      abs_err += std::abs(model.evaluate(z) - true_ratio(x, theta));
    }
  }
  summary.ratio_mae_on_lattice = abs_err / double(lattice * lattice);

  const std::vector<int> resolution{config.grid_resolution};
  for (std::size_t i = 0; i < config.x_obs.size(); ++i) {
    const Vector x_obs = Vector::Constant(1, config.x_obs[i]);
    const PosteriorGrid grid = posterior_from_ratio(model, prior, x_obs, resolution);
    write_posterior_csv(join(ctx.out_dir, "posterior_" + std::to_string(i) + ".csv"),
                        grid);
    LfirePosteriorCheck check;
    check.x_obs = config.x_obs[i];
    check.grid_mean = grid.mean()[0];
    check.grid_variance = grid.covariance()(0, 0);
    check.conjugate_mean = config.x_obs[i] * p2 / marg_var;
    check.conjugate_variance = p2 * s2 / marg_var;
    summary.posteriors.push_back(check);
  }

  nlohmann::json js;
  js["final_loss"] = summary.final_loss;
  js["ratio_mae_on_lattice"] = summary.ratio_mae_on_lattice;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : summary.posteriors) {
    checks.push_back({{"x_obs", c.x_obs},
                      {"grid_mean", c.grid_mean},
                      {"grid_variance", c.grid_variance},
                      {"conjugate_mean", c.conjugate_mean},
                      {"conjugate_variance", c.conjugate_variance}});
  }
  js["posteriors"] = std::move(checks);
  std::ofstream json_out(join(ctx.out_dir, "lfire_summary.json"));
  json_out << js.dump(2) << "\n";

  write_manifest(ctx, "lfire", config, clock.seconds());
  return summary;
}

namespace {

RatioFactory sir_ratio_factory(const BoedSirExperimentConfig& config, int input_dim,
                               std::uint64_t seed) {
  if (config.ratio_hidden > 0) {
    const int hidden = config.ratio_hidden;
    return [input_dim, hidden, seed]() -> std::unique_ptr<LogRatioModel> {
      return std::make_unique<MlpRatioModel>(input_dim, hidden, seed);
    };
  }
  return [input_dim]() -> std::unique_ptr<LogRatioModel> {
    return std::make_unique<LinearRatioModel>(
        std::make_shared<QuadraticFeatureMap>(input_dim));
  };
}

}  // namespace

BoedSirSummary run_boed_sir(const BoedSirExperimentConfig& config, const RunContext& ctx) {
  const WallClock clock;
  prepare_out_dir(ctx.out_dir);
  if (config.design_grid < 1) {
    throw std::invalid_argument("boed-sir: need at least one candidate design");
  }

  const SirSimulator sim(config.sir, 1);
  Vector prior_lo(2), prior_hi(2);
  prior_lo << config.beta_lo, config.gamma_lo;
  prior_hi << config.beta_hi, config.gamma_hi;
  const UniformBoxPrior prior(prior_lo, prior_hi);

  DesignSpace space;
  space.lower = Vector::Constant(1, std::min(config.design_lo, config.design_hi));
  space.upper = Vector::Constant(1, std::max(config.design_lo, config.design_hi));

  DesignOptConfig opt;
  opt.strategy = DesignStrategy::GridRefit;
  opt.n_per_evaluation = config.n_per_design;
  opt.ratio_optimizer = default_fit_optimizer(config.max_iterations);
  for (int i = 0; i < config.design_grid; ++i) {
    const double t = config.design_grid > 1
                         ? config.design_lo + (config.design_hi - config.design_lo) *
                                                  double(i) / double(config.design_grid - 1)
                         : config.design_lo;
    opt.candidates.push_back(Vector::Constant(1, t));
  }

  const MiTrace trace = concurrent_design_optimise(
      sim, prior, space, sir_ratio_factory(config, sim.data_dim() + 2, sub_seed(ctx.seed, 3)),
      opt, ctx.seed);
  write_mi_trace_csv(join(ctx.out_dir, "design_trace.csv"), trace);

  BoedSirSummary summary;
  for (const auto& row : trace.rows) {
    summary.candidate_times.push_back(row.design[0]);
    summary.bounds.push_back(row.bound);
  }
  summary.d_hat = trace.final_design[0];
  summary.best_bound = trace.final_bound;

  // Posterior replicates at the chosen design against ground truth.
  Vector truth(2);
  truth << config.beta_true, config.gamma_true;
  const Vector range = prior_hi - prior_lo;
  const Vector prior_mean = 0.5 * (prior_lo + prior_hi);
  summary.prior_mean_distance =
      ((prior_mean - truth).array() / range.array()).matrix().norm();
  summary.posterior_seeds = config.posterior_seeds;

  const std::vector<int> resolution{config.posterior_resolution,
                                    config.posterior_resolution};
  CsvWriter post_csv(join(ctx.out_dir, "posterior_summary.csv"),
                     {"seed", "mode_beta", "mode_gamma", "mode_distance",
                      "prior_mean_distance", "beats_prior"});
  std::vector<double> mode_distances;
  for (int s = 0; s < config.posterior_seeds; ++s) {
    const Vector x_obs =
        sir_simulate(config.sir, config.beta_true, config.gamma_true,
                     trace.final_design, sub_seed(ctx.seed, 5000 + std::uint64_t(s)));
    const PosteriorGrid grid =
        posterior_at_design(*trace.final_model, prior, x_obs, resolution);
    if (s == 0) {
      write_posterior_csv(join(ctx.out_dir, "posterior.csv"), grid);
    }
    const Vector mode = grid.mode();
    const double dist = ((mode - truth).array() / range.array()).matrix().norm();
    mode_distances.push_back(dist);
    const bool beats = dist < summary.prior_mean_distance;
    summary.seeds_beating_prior += beats ? 1 : 0;
    post_csv.row(s, mode[0], mode[1], dist, summary.prior_mean_distance,
                 beats ? 1 : 0);
  }
  summary.posterior_mode_distance_median = median(mode_distances);

  write_manifest(ctx, "boed-sir", config, clock.seconds());
  return summary;
}

std::vector<MiEstimate> sir_mi_oracle_curve(const BoedSirExperimentConfig& config,
                                            const std::vector<double>& candidate_times,
                                            int bins_per_axis, Eigen::Index n_outer,
                                            Eigen::Index n_inner, std::uint64_t seed) {
  const SirSimulator sim(config.sir, 1);
  Vector prior_lo(2), prior_hi(2);
  prior_lo << config.beta_lo, config.gamma_lo;
  prior_hi << config.beta_hi, config.gamma_hi;
  const UniformBoxPrior prior(prior_lo, prior_hi);
  const auto binning = fraction_binning(bins_per_axis);

  std::vector<MiEstimate> curve(candidate_times.size());
  for (std::size_t i = 0; i < candidate_times.size(); ++i) {
    const Vector design = Vector::Constant(1, candidate_times[i]);
    // Same seed for every candidate: common random numbers.
    curve[i] = nested_mc_mi_oracle(sim, prior, design, binning, n_outer, n_inner, seed);
  }
  return curve;
}

SelftestResult run_selftest(std::uint64_t seed) {
  SelftestResult result;
  const auto check = [&result](bool ok, const std::string& name,
                               const std::string& detail) {
    result.lines.push_back(std::string(ok ? "[ok]   " : "[FAIL] ") + name +
                           (detail.empty() ? "" : ": " + detail));
    (ok ? result.passed : result.failed) += 1;
  };

  // Loss calibration at h = 0, nu = 1.
  {
    const DiagonalGaussian p = DiagonalGaussian::standard(1);
    const LabeledTwoSample sample =
        make_two_sample(p.sample(512, sub_seed(seed, 0)), p.sample(512, sub_seed(seed, 1)));
    const FunctionRatio zero(1, [](const Vector&) { return 0.0; });
    const double loss = logistic_loss(zero, sample).loss_value;
    check(std::abs(loss - kTwoLog2) < 1e-12, "loss calibration",
          "J(0) = " + format_double(loss));
  }

  // Gradient vs central finite differences on a random quadratic model.
  {
    const DiagonalGaussian p = DiagonalGaussian::standard(2);
    const LabeledTwoSample sample =
        make_two_sample(p.sample(256, sub_seed(seed, 2)), p.sample(256, sub_seed(seed, 3)));
    LinearRatioModel model(std::make_shared<QuadraticFeatureMap>(2));
    Rng rng(sub_seed(seed, 4));
    Vector w(model.parameter_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 0.3 * rng.normal();
    const Objective objective = [&](const Vector& v, Vector& grad) {
      model.set_parameters(v);
      const LossReport r = logistic_loss_with_gradient(model, sample);
      grad = r.gradient;
      return r.loss_value;
    };
    const double err = finite_difference_check(objective, w);
    check(err < 1e-4, "loss gradient", "max relative fd error = " + format_double(err));
  }

  // RNG reproducibility.
  {
    Rng a(seed), b(seed);
    bool same = true;
    for (int i = 0; i < 16; ++i) same &= a.next_u64() == b.next_u64();
    check(same, "rng determinism", "");
  }

  // Quadrature resolves the standard normal.
  {
    const Quadrature1D quad = default_density_quadrature(1.0);
    const double mass = quad.integrate([](double x) {
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    });
    check(std::abs(mass - 1.0) < 1e-10, "quadrature normalisation",
          "int N(0,1) = " + format_double(mass));
  }

  // Partition function against quadrature.
  {
    const Quadrature1D quad = default_density_quadrature(2.0);
    const double z =
        quad.integrate([](double x) { return std::exp(-0.5 * x * x / 4.0); });
    check(std::abs(z - gaussian_partition(2.0)) < 1e-9, "gaussian partition",
          "quadrature Z = " + format_double(z));
  }

  return result;
}

}  // namespace ctl
