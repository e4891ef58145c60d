#pragma once

#include "ctl/boed.hpp"
#include "ctl/nce.hpp"
#include "ctl/sir.hpp"
#include "ctl/telescoping.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ctl {

// Shared bits of every experiment run: where to write, the master
// seed, and the version string recorded in the manifest.
struct RunContext {
  std::string out_dir;
  std::uint64_t seed = 20260810;
  std::string version = "unversioned";
};

void write_manifest(const RunContext& ctx, const std::string& experiment,
                    const nlohmann::json& config, double wall_clock_seconds);

// --- fig-loglik: log-likelihood decomposition of the Gaussian toy ---

struct FigLoglikConfig {
  long n = 400;
  double sigma_true = 1.5;
  double grid_lo = 0.25;
  double grid_hi = 4.0;
  int grid_points = 151;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FigLoglikConfig, n, sigma_true, grid_lo, grid_hi,
                                   grid_points)

struct FigLoglikSummary {
  double argmax_sigma = 0.0;
  double analytic_mle = 0.0;  // sqrt(mean x^2)
  double grid_step = 0.0;
  bool partition_decreasing = false;
  bool energy_increasing = false;
};

FigLoglikSummary run_fig_loglik(const FigLoglikConfig& config, const RunContext& ctx);

// --- nce: noise-contrastive estimation of the Gaussian toy ---

struct NceExperimentConfig {
  long n = 20000;
  double nu = 10.0;
  double sigma_true = 2.0;
  double sigma_init = 1.5;
  double q_sigma = 3.0;
  int replicates = 5;
  int max_iterations = 400;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(NceExperimentConfig, n, nu, sigma_true, sigma_init,
                                   q_sigma, replicates, max_iterations)

struct NceExperimentSummary {
  std::vector<double> sigma_hats;
  std::vector<double> c_hats;
  double sigma_hat_median = 0.0;
  // median over replicates of |c_hat + log Z(sigma_hat)|
  double normalisation_gap_median = 0.0;
};

NceExperimentSummary run_nce_experiment(const NceExperimentConfig& config,
                                        const RunContext& ctx);

// --- chasm: density-chasm diagnostic (single ratio vs telescoping) ---

struct ChasmExperimentConfig {
  std::vector<double> alphas{1.0, 2.0, 4.0, 8.0};
  int dim = 10;
  long n = 5000;
  int K = 8;
  int seeds = 20;
  int max_iterations = 400;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ChasmExperimentConfig, alphas, dim, n, K, seeds,
                                   max_iterations)

struct ChasmExperimentSummary {
  std::vector<ChasmRow> rows;
  // per alpha, medians over seeds
  std::vector<double> alphas;
  std::vector<double> single_error_median;
  std::vector<double> tre_error_median;
  std::vector<double> single_curvature_median;
};

ChasmExperimentSummary run_chasm_experiment(const ChasmExperimentConfig& config,
                                            const RunContext& ctx);

// --- lfire: amortised posterior for the linear-Gaussian simulator ---

struct LfireExperimentConfig {
  long n = 100000;
  double prior_sigma = 1.0;
  double noise_sigma = 1.0;
  std::vector<double> x_obs{1.0, -1.0};
  int grid_resolution = 401;
  int max_iterations = 400;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LfireExperimentConfig, n, prior_sigma, noise_sigma,
                                   x_obs, grid_resolution, max_iterations)

struct LfirePosteriorCheck {
  double x_obs = 0.0;
  double grid_mean = 0.0;
  double grid_variance = 0.0;
  double conjugate_mean = 0.0;
  double conjugate_variance = 0.0;
};

struct LfireExperimentSummary {
  std::vector<LfirePosteriorCheck> posteriors;
  double ratio_mae_on_lattice = 0.0;  // vs the closed-form log-ratio on [-2,2]^2
  double final_loss = 0.0;
};

LfireExperimentSummary run_lfire_experiment(const LfireExperimentConfig& config,
                                            const RunContext& ctx);

// --- boed-sir: JSD-bound design of SIR measurement times ---

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SirConfig, population, initial_infected, horizon,
                                   steps)

struct BoedSirExperimentConfig {
  SirConfig sir;
  double beta_lo = 0.0, beta_hi = 3.0;
  double gamma_lo = 0.0, gamma_hi = 1.5;
  double beta_true = 2.0, gamma_true = 0.5;
  int design_grid = 10;
  double design_lo = 0.3, design_hi = 3.0;
  long n_per_design = 6000;
  int posterior_resolution = 40;
  int posterior_seeds = 20;
  int ratio_hidden = 0;  // 0: quadratic features; > 0: tanh MLP of this width
  int max_iterations = 400;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BoedSirExperimentConfig, sir, beta_lo, beta_hi,
                                   gamma_lo, gamma_hi, beta_true, gamma_true,
                                   design_grid, design_lo, design_hi, n_per_design,
                                   posterior_resolution, posterior_seeds, ratio_hidden,
                                   max_iterations)

struct BoedSirSummary {
  std::vector<double> candidate_times;
  std::vector<double> bounds;
  double d_hat = 0.0;
  double best_bound = 0.0;
  // posterior replicates at the chosen design, distances in
  // prior-standardised units
  double prior_mean_distance = 0.0;
  double posterior_mode_distance_median = 0.0;
  int seeds_beating_prior = 0;
  int posterior_seeds = 0;
};

BoedSirSummary run_boed_sir(const BoedSirExperimentConfig& config, const RunContext& ctx);

// Nested-MC MI oracle over the same candidate grid, with coarsened
// observations; used to cross-check the JSD argmax.
std::vector<MiEstimate> sir_mi_oracle_curve(const BoedSirExperimentConfig& config,
                                            const std::vector<double>& candidate_times,
                                            int bins_per_axis, Eigen::Index n_outer,
                                            Eigen::Index n_inner, std::uint64_t seed);

// --- selftest: quick internal consistency checks ---

struct SelftestResult {
  int passed = 0;
  int failed = 0;
  std::vector<std::string> lines;
};

SelftestResult run_selftest(std::uint64_t seed);

}  // namespace ctl
