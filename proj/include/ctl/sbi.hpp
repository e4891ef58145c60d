#pragma once

#include "ctl/logistic_loss.hpp"
#include "ctl/optimize.hpp"
#include "ctl/ratio_model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ctl {

// Stochastic program (theta, design, seed) -> x with no tractable
// density; deterministic given all three arguments.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual int parameter_dim() const = 0;
  virtual int data_dim() const = 0;
  virtual int design_dim() const = 0;  // 0 when the simulator takes no design
  virtual Vector run(const Vector& theta, const Vector& design,
                     std::uint64_t seed) const = 0;
};

// Simulator whose conditional density is known analytically; gives the
// nested Monte Carlo oracle an exact inner integrand.
class AnalyticConditionalSimulator : public Simulator {
 public:
  virtual double conditional_log_density(const Vector& x, const Vector& theta,
                                         const Vector& design) const = 0;
};

// x = theta + noise_sigma * eps, 1-D, no design.
class GaussianMeanSimulator final : public AnalyticConditionalSimulator {
 public:
  explicit GaussianMeanSimulator(double noise_sigma = 1.0);
  int parameter_dim() const override { return 1; }
  int data_dim() const override { return 1; }
  int design_dim() const override { return 0; }
  Vector run(const Vector& theta, const Vector& design,
             std::uint64_t seed) const override;
  double conditional_log_density(const Vector& x, const Vector& theta,
                                 const Vector& design) const override;

 private:
  double noise_sigma_;
};

// x = d * theta + noise_sigma * eps, 1-D design.
class LinearDesignSimulator final : public AnalyticConditionalSimulator {
 public:
  explicit LinearDesignSimulator(double noise_sigma = 1.0);
  int parameter_dim() const override { return 1; }
  int data_dim() const override { return 1; }
  int design_dim() const override { return 1; }
  Vector run(const Vector& theta, const Vector& design,
             std::uint64_t seed) const override;
  double conditional_log_density(const Vector& x, const Vector& theta,
                                 const Vector& design) const override;

 private:
  double noise_sigma_;
};

// Prior over parameters: sampler, exact log-density and a box support
// used to lay out posterior grids.
class PriorSpec {
 public:
  virtual ~PriorSpec() = default;
  virtual int dim() const = 0;
  virtual Matrix sample(Eigen::Index count, std::uint64_t seed) const = 0;
  virtual double log_density(const Vector& theta) const = 0;
  virtual Vector support_lower() const = 0;
  virtual Vector support_upper() const = 0;
};

// Independent Gaussian prior; grid box spans +-6 sigma.
class GaussianPrior final : public PriorSpec {
 public:
  GaussianPrior(Vector mean, Vector sigma);
  int dim() const override { return int(mean_.size()); }
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override;
  double log_density(const Vector& theta) const override;
  Vector support_lower() const override;
  Vector support_upper() const override;

 private:
  Vector mean_, sigma_;
};

class UniformBoxPrior final : public PriorSpec {
 public:
  UniformBoxPrior(Vector lower, Vector upper);
  int dim() const override { return int(lower_.size()); }
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override;
  double log_density(const Vector& theta) const override;
  Vector support_lower() const override { return lower_; }
  Vector support_upper() const override { return upper_; }

 private:
  Vector lower_, upper_;
  double log_volume_;
};

// Bank of (theta, x) pairs; rows are paired by index.
struct JointSample {
  Matrix theta;  // n x parameter_dim
  Matrix x;      // n x data_dim
  std::uint64_t master_seed = 0;
  int simulator_failures = 0;

  Eigen::Index size() const { return theta.rows(); }
  // Concatenated [x, theta] rows, the classifier input.
  Matrix stacked() const;
};

// theta_i ~ prior, x_i = sim(theta_i, design, seed_i); simulator
// failures (exceptions or non-finite output) are re-drawn with fresh
// sub-seeds, at most 10 times per draw.
JointSample simulate_joint(const Simulator& sim, const PriorSpec& prior,
                           const Vector& design, Eigen::Index n, std::uint64_t seed);

// Breaks the (theta, x) dependence by uniformly permuting the theta
// rows (fixed points allowed).
JointSample marginal_pairs(const JointSample& joint, std::uint64_t seed);

// Amortised ratio fit h(x, theta) ~ log p(x|theta) - log p(x) on the
// concatenated [x, theta] space; requires equal counts (nu = 1).
// The model is fitted in place; returns the final loss report.
LossReport lfire_amortised_fit(const JointSample& joint, const JointSample& marginal,
                               LogRatioModel& model, const OptimizerConfig& optimizer);

// Discretised posterior over a regular lattice of cell centres.
struct PosteriorGrid {
  Matrix points;    // G x p cell centres
  Vector weights;   // nonnegative, sums to 1
  Vector lower, upper;
  std::vector<int> resolution;

  double cell_volume() const;
  Vector mean() const;
  Matrix covariance() const;
  Vector mode() const;
  double total_variation(const PosteriorGrid& other) const;
};

// Lattice of cell centres over the prior box; weights proportional to
// prior(theta) * exp(h(x_obs, theta)).
PosteriorGrid posterior_from_ratio(const LogRatioModel& ratio, const PriorSpec& prior,
                                   const Vector& x_obs,
                                   const std::vector<int>& resolution);

// Per-theta reference path: an independent classifier per grid point,
// each contrasting sims at that theta against the marginal bank. Used
// to cross-check the amortised fit.
PosteriorGrid lfire_per_theta_posterior(
    const Simulator& sim, const PriorSpec& prior, const Vector& design,
    const Vector& x_obs, const std::vector<int>& resolution, Eigen::Index n_per_theta,
    const std::function<std::unique_ptr<LogRatioModel>()>& model_factory,
    const OptimizerConfig& optimizer, std::uint64_t seed);

void write_posterior_csv(const std::string& path, const PosteriorGrid& grid);
void write_joint_csv(const std::string& path, const JointSample& joint);

}  // namespace ctl
