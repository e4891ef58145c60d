#include "ctl/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ctl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

RunContext context(const TempDir& dir, std::uint64_t seed) {
  RunContext ctx;
  ctx.out_dir = dir.str();
  ctx.seed = seed;
  ctx.version = "test";
  return ctx;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("experiments");

TEST_CASE("fig-loglik writes the decomposition and finds the scale mle") {
  const TempDir dir("ctl_test_figloglik");
  FigLoglikConfig config;
  config.n = 300;
  config.grid_points = 301;
  const FigLoglikSummary summary = run_fig_loglik(config, context(dir, 1));

  CHECK(summary.partition_decreasing);
  CHECK(summary.energy_increasing);
  CHECK(std::abs(summary.argmax_sigma - summary.analytic_mle) <= summary.grid_step);

  const std::string csv = slurp(dir.path / "loglik_decomposition.csv");
  CHECK(csv.rfind("sigma,partition_term,energy_term,total", 0) == 0);
  const std::string manifest = slurp(dir.path / "manifest.json");
  CHECK(manifest.find("\"experiment\": \"fig-loglik\"") != std::string::npos);
  CHECK(manifest.find("\"master_seed\": 1") != std::string::npos);
  CHECK(manifest.find("wall_clock_seconds") != std::string::npos);
}

TEST_CASE("fig-loglik single-point grid produces a single row") {
  const TempDir dir("ctl_test_figloglik1");
  FigLoglikConfig config;
  config.n = 50;
  config.grid_points = 1;
  config.grid_lo = 1.3;
  config.grid_hi = 1.3;
  const FigLoglikSummary summary = run_fig_loglik(config, context(dir, 2));
  CHECK(summary.argmax_sigma == 1.3);
  const std::string csv = slurp(dir.path / "loglik_decomposition.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
}

TEST_CASE("nce experiment summarises replicates") {
  const TempDir dir("ctl_test_nce");
  NceExperimentConfig config;
  config.n = 4000;
  config.replicates = 3;
  config.max_iterations = 200;
  const NceExperimentSummary summary = run_nce_experiment(config, context(dir, 3));
  CHECK(summary.sigma_hats.size() == 3);
  CHECK(summary.sigma_hat_median > 1.5);
  CHECK(summary.sigma_hat_median < 2.5);
  CHECK(fs::exists(dir.path / "nce_summary.csv"));
  CHECK(fs::exists(dir.path / "nce_fits.json"));
  CHECK(fs::exists(dir.path / "trajectory_0.csv"));
}

TEST_CASE("lfire experiment matches the conjugate posteriors") {
  const TempDir dir("ctl_test_lfire");
  LfireExperimentConfig config;
  config.n = 30000;
  config.grid_resolution = 201;
  const LfireExperimentSummary summary = run_lfire_experiment(config, context(dir, 4));
  REQUIRE(summary.posteriors.size() == 2);
  for (const auto& p : summary.posteriors) {
    CHECK(std::abs(p.grid_mean - p.conjugate_mean) < 0.08);
    CHECK(std::abs(p.grid_variance - p.conjugate_variance) < 0.08);
  }
  CHECK(summary.ratio_mae_on_lattice < 0.2);
  CHECK(fs::exists(dir.path / "posterior_0.csv"));
  CHECK(fs::exists(dir.path / "posterior_1.csv"));
  CHECK(fs::exists(dir.path / "lfire_summary.json"));
}

TEST_CASE("selftest passes on a fresh seed") {
  const SelftestResult result = run_selftest(12345);
  CHECK(result.failed == 0);
  CHECK(result.passed >= 5);
}

TEST_CASE("config json round-trips") {
  BoedSirExperimentConfig config;
  config.design_grid = 7;
  config.sir.population = 321;
  const nlohmann::json j = config;
  const auto back = j.get<BoedSirExperimentConfig>();
  CHECK(back.design_grid == 7);
  CHECK(back.sir.population == 321);
  CHECK(back.beta_hi == config.beta_hi);
}

TEST_SUITE_END();
