#include "ctl/random.hpp"
#include "ctl/sbi.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

using namespace ctl;

namespace {

OptimizerConfig fit_optimizer(int iterations = 400) {
  OptimizerConfig opt;
  opt.max_iterations = iterations;
  opt.gradient_tolerance = 1e-7;
  return opt;
}

// Kolmogorov-Smirnov distance between two equally sized 1-D samples.
double ks_distance(Vector a, Vector b) {
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  double d = 0.0;
  Eigen::Index i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(double(i) / double(a.size()) -
                             double(j) / double(b.size())));
  }
  return d;
}

// A simulator that fails for every theta below a threshold.
class FlakySimulator final : public Simulator {
 public:
  int parameter_dim() const override { return 1; }
  int data_dim() const override { return 1; }
  int design_dim() const override { return 0; }
  Vector run(const Vector& theta, const Vector&, std::uint64_t seed) const override {
    if (theta[0] < 0.0) {
      throw std::runtime_error("unstable configuration");
    }
    Rng rng(seed);
    return Vector::Constant(1, theta[0] + 0.1 * rng.normal());
  }
};

}  // namespace

TEST_SUITE_BEGIN("sbi");

TEST_CASE("joint simulation obeys the variance addition law") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const Eigen::Index n = 100000;
  const JointSample joint = simulate_joint(sim, prior, Vector(0), n, 99);

  const double mean = joint.x.col(0).mean();
  const double var = (joint.x.col(0).array() - mean).square().sum() / double(n - 1);
  // var(x) = var(theta) + var(noise) = 2, se(var) ~ sqrt(2/n) * 2
  CHECK(std::abs(var - 2.0) < 5.0 * 2.0 * std::sqrt(2.0 / double(n)));
  CHECK(std::abs(mean) < 5.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("single-pair simulation is reproducible") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const JointSample a = simulate_joint(sim, prior, Vector(0), 1, 7);
  const JointSample b = simulate_joint(sim, prior, Vector(0), 1, 7);
  CHECK(a.theta(0, 0) == b.theta(0, 0));
  CHECK(a.x(0, 0) == b.x(0, 0));
}

TEST_CASE("simulator failures are retried with fresh draws") {
  const FlakySimulator sim;
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const JointSample joint = simulate_joint(sim, prior, Vector(0), 500, 23);
  CHECK(joint.simulator_failures > 0);
  CHECK((joint.theta.col(0).array() >= 0.0).all());
  CHECK(joint.x.allFinite());
}

TEST_CASE("shuffled pairs preserve the marginals and break the dependence") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const Eigen::Index n = 100000;
  const JointSample joint = simulate_joint(sim, prior, Vector(0), n, 31);
  const JointSample shuffled = marginal_pairs(joint, 37);

  SUBCASE("marginals unchanged (KS below the 1% critical value)") {
    // Same multisets, different order: KS distance is exactly zero, but
    // compute it anyway as the documented check.
    const double critical = 1.63 * std::sqrt(2.0 / double(n));
    CHECK(ks_distance(joint.theta.col(0), shuffled.theta.col(0)) < critical);
    CHECK(ks_distance(joint.x.col(0), shuffled.x.col(0)) < critical);
  }

  SUBCASE("correlation drops to zero") {
    const auto correlation = [](const Vector& a, const Vector& b) {
      const double ma = a.mean(), mb = b.mean();
      const double cov = ((a.array() - ma) * (b.array() - mb)).sum();
      return cov / std::sqrt((a.array() - ma).square().sum() *
                             (b.array() - mb).square().sum());
    };
    CHECK(correlation(joint.theta.col(0), joint.x.col(0)) > 0.5);
    CHECK(std::abs(correlation(shuffled.theta.col(0), shuffled.x.col(0))) <
          3.0 / std::sqrt(double(n)));
  }

  SUBCASE("re-shuffling keeps a valid product sample") {
    const JointSample twice = marginal_pairs(shuffled, 41);
    const double critical = 1.63 * std::sqrt(2.0 / double(n));
    CHECK(ks_distance(joint.theta.col(0), twice.theta.col(0)) < critical);
  }

  SUBCASE("two pairs with a swapping seed exchange the parameters") {
    JointSample tiny;
    tiny.theta = Matrix(2, 1);
    tiny.theta << 1.0, 2.0;
    tiny.x = Matrix(2, 1);
    tiny.x << 10.0, 20.0;
    bool saw_swap = false;
    for (std::uint64_t seed = 0; seed < 32 && !saw_swap; ++seed) {
      const JointSample out = marginal_pairs(tiny, seed);
      CHECK(out.x(0, 0) == 10.0);
      CHECK(out.x(1, 0) == 20.0);
      if (out.theta(0, 0) == 2.0) {
        CHECK(out.theta(1, 0) == 1.0);
        saw_swap = true;
      }
    }
    CHECK(saw_swap);
  }
}

TEST_CASE("amortised ratio fit on the linear-gaussian benchmark") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const Eigen::Index n = 100000;
  const JointSample joint = simulate_joint(sim, prior, Vector(0), n, 51);
  const JointSample marginal = marginal_pairs(joint, 53);

  LinearRatioModel model(std::make_shared<QuadraticFeatureMap>(2));
  lfire_amortised_fit(joint, marginal, model, fit_optimizer());

  const auto true_ratio = [](double x, double theta) {
    const double cond = -0.5 * kLog2Pi - 0.5 * (x - theta) * (x - theta);
    const double marg = -0.5 * kLog2Pi - 0.5 * std::log(2.0) - 0.25 * x * x;
    return cond - marg;
  };

  SUBCASE("fitted ratio matches the closed form on the lattice") {
    double mae = 0.0;
    int count = 0;
    Vector z(2);
    for (double x = -2.0; x <= 2.001; x += 0.1) {
      for (double theta = -2.0; theta <= 2.001; theta += 0.1) {
        z << x, theta;
        mae += std::abs(model.evaluate(z) - true_ratio(x, theta));
        ++count;
      }
    }
    CHECK(mae / count < 0.1);
  }

  SUBCASE("exp(h) integrates to one as a likelihood ratio") {
    // E_{p(x)}[p(x|theta)/p(x)] = 1 for fixed theta.
    const double theta = 0.7;
    Matrix z(joint.size(), 2);
    z.col(0) = marginal.x.col(0);
    z.col(1).setConstant(theta);
    const Vector ratios = model.evaluate_batch(z).array().exp();
    const double mean = ratios.mean();
    const double se = std::sqrt((ratios.array() - mean).square().sum() /
                                double(n - 1) / double(n));
    CHECK(std::abs(mean - 1.0) < 3.0 * se);
  }

  SUBCASE("posterior grids match the conjugate oracle, amortised over x_obs") {
    for (double x_obs : {1.0, -1.0}) {
      const PosteriorGrid grid = posterior_from_ratio(
          model, prior, Vector::Constant(1, x_obs), {401});
      CHECK(std::abs(grid.mean()[0] - 0.5 * x_obs) < 0.05);
      CHECK(std::abs(grid.covariance()(0, 0) - 0.5) < 0.05);
    }
  }
}

TEST_CASE("theta-independent simulators give a flat ratio") {
  // x ignores theta: joint equals the product of marginals.
  class NoiseOnly final : public Simulator {
   public:
    int parameter_dim() const override { return 1; }
    int data_dim() const override { return 1; }
    int design_dim() const override { return 0; }
    Vector run(const Vector&, const Vector&, std::uint64_t seed) const override {
      Rng rng(seed);
      return Vector::Constant(1, rng.normal());
    }
  };
  const NoiseOnly sim;
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const JointSample joint = simulate_joint(sim, prior, Vector(0), 100000, 61);
  const JointSample marginal = marginal_pairs(joint, 67);

  LinearRatioModel model(std::make_shared<QuadraticFeatureMap>(2));
  lfire_amortised_fit(joint, marginal, model, fit_optimizer());

  double mean_abs = 0.0;
  int count = 0;
  Vector z(2);
  for (double x = -2.0; x <= 2.001; x += 0.2) {
    for (double theta = -2.0; theta <= 2.001; theta += 0.2) {
      z << x, theta;
      mean_abs += std::abs(model.evaluate(z));
      ++count;
    }
  }
  CHECK(mean_abs / count < 0.05);
}

TEST_CASE("posterior grid mechanics") {
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));

  SUBCASE("a flat ratio returns the discretised prior") {
    const FunctionRatio flat(2, [](const Vector&) { return 0.0; });
    const PosteriorGrid grid =
        posterior_from_ratio(flat, prior, Vector::Constant(1, 0.3), {501});
    CHECK(std::abs(grid.weights.sum() - 1.0) < 1e-12);
    CHECK((grid.weights.array() >= 0.0).all());
    CHECK(std::abs(grid.mean()[0]) < 1e-10);
    CHECK(std::abs(grid.covariance()(0, 0) - 1.0) < 1e-3);

    // Weights proportional to the prior at the cell centres.
    Vector expected(grid.points.rows());
    for (Eigen::Index g = 0; g < grid.points.rows(); ++g) {
      expected[g] = std::exp(prior.log_density(grid.points.row(g).transpose()));
    }
    expected /= expected.sum();
    CHECK((expected - grid.weights).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("additive constants in h change nothing") {
    const FunctionRatio base(2, [](const Vector& z) { return z[0] * z[1]; });
    const FunctionRatio shifted(2, [](const Vector& z) { return z[0] * z[1] + 123.0; });
    const PosteriorGrid a =
        posterior_from_ratio(base, prior, Vector::Constant(1, 1.0), {301});
    const PosteriorGrid b =
        posterior_from_ratio(shifted, prior, Vector::Constant(1, 1.0), {301});
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("oracle ratio isolates the discretisation error") {
    const FunctionRatio oracle(2, [](const Vector& z) {
      const double x = z[0], theta = z[1];
      const double cond = -0.5 * kLog2Pi - 0.5 * (x - theta) * (x - theta);
      const double marg = -0.5 * kLog2Pi - 0.5 * std::log(2.0) - 0.25 * x * x;
      return cond - marg;
    });
    const PosteriorGrid grid =
        posterior_from_ratio(oracle, prior, Vector::Constant(1, 1.0), {801});

    // Discretised analytic posterior N(0.5, 0.5) on the same lattice.
    PosteriorGrid analytic = grid;
    for (Eigen::Index g = 0; g < grid.points.rows(); ++g) {
      const double t = grid.points(g, 0);
      analytic.weights[g] = std::exp(-0.5 * (t - 0.5) * (t - 0.5) / 0.5);
    }
    analytic.weights /= analytic.weights.sum();
    CHECK(grid.total_variation(analytic) < 1e-3);
  }

  SUBCASE("underflow everywhere is reported") {
    const FunctionRatio sink(2, [](const Vector&) { return -1e308; });
    CHECK_THROWS_AS(
        posterior_from_ratio(sink, prior, Vector::Constant(1, 0.0), {101}),
        std::runtime_error);
  }
}

TEST_CASE("per-theta reference path agrees with the amortised posterior") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));

  const Eigen::Index n = 30000;
  const JointSample joint = simulate_joint(sim, prior, Vector(0), n, 71);
  const JointSample marginal = marginal_pairs(joint, 73);
  LinearRatioModel amortised(std::make_shared<QuadraticFeatureMap>(2));
  lfire_amortised_fit(joint, marginal, amortised, fit_optimizer());

  const Vector x_obs = Vector::Constant(1, 1.0);
  const std::vector<int> resolution{41};
  const PosteriorGrid from_amortised =
      posterior_from_ratio(amortised, prior, x_obs, resolution);
  const PosteriorGrid from_per_theta = lfire_per_theta_posterior(
      sim, prior, Vector(0), x_obs, resolution, 4000,
      [] {
        return std::make_unique<LinearRatioModel>(
            std::make_shared<QuadraticFeatureMap>(1));
      },
      fit_optimizer(250), 79);

  CHECK(from_amortised.total_variation(from_per_theta) < 0.1);
  const double conjugate_mean = 0.5;
  CHECK(std::abs(from_per_theta.mean()[0] - conjugate_mean) < 0.08);
}

TEST_CASE("joint banks serialise with their seed header") {
  const GaussianMeanSimulator sim(1.0);
  const GaussianPrior prior(Vector::Zero(1), Vector::Ones(1));
  const JointSample joint = simulate_joint(sim, prior, Vector(0), 10, 81);
  const std::string path = "joint_bank_test.csv";
  write_joint_csv(path, joint);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# master_seed=81");
  std::getline(in, line);
  CHECK(line == "theta_0,x_0");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 10);
  std::remove(path.c_str());
}

TEST_SUITE_END();
