#include "ctl/sbi.hpp"

#include "ctl/csv.hpp"
#include "ctl/parallel.hpp"
#include "ctl/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ctl {

GaussianMeanSimulator::GaussianMeanSimulator(double noise_sigma)
    : noise_sigma_(noise_sigma) {
  if (!(noise_sigma > 0.0)) {
    throw std::invalid_argument("GaussianMeanSimulator: noise sigma must be positive");
  }
}

Vector GaussianMeanSimulator::run(const Vector& theta, const Vector&,
                                  std::uint64_t seed) const {
  Rng rng(seed);
  return Vector::Constant(1, theta[0] + noise_sigma_ * rng.normal());
}

double GaussianMeanSimulator::conditional_log_density(const Vector& x,
                                                      const Vector& theta,
                                                      const Vector&) const {
  const double z = (x[0] - theta[0]) / noise_sigma_;
  return -std::log(noise_sigma_) - 0.5 * kLog2Pi - 0.5 * z * z;
}

LinearDesignSimulator::LinearDesignSimulator(double noise_sigma)
    : noise_sigma_(noise_sigma) {
  if (!(noise_sigma > 0.0)) {
    throw std::invalid_argument("LinearDesignSimulator: noise sigma must be positive");
  }
}

Vector LinearDesignSimulator::run(const Vector& theta, const Vector& design,
                                  std::uint64_t seed) const {
  if (design.size() != 1) {
    throw std::invalid_argument("LinearDesignSimulator: expects a 1-D design");
  }
  Rng rng(seed);
  return Vector::Constant(1, design[0] * theta[0] + noise_sigma_ * rng.normal());
}

double LinearDesignSimulator::conditional_log_density(const Vector& x,
                                                      const Vector& theta,
                                                      const Vector& design) const {
  const double z = (x[0] - design[0] * theta[0]) / noise_sigma_;
  return -std::log(noise_sigma_) - 0.5 * kLog2Pi - 0.5 * z * z;
}

GaussianPrior::GaussianPrior(Vector mean, Vector sigma)
    : mean_(std::move(mean)), sigma_(std::move(sigma)) {
  if (mean_.size() != sigma_.size() || mean_.size() == 0 ||
      (sigma_.array() <= 0.0).any()) {
    throw std::invalid_argument("GaussianPrior: bad mean/sigma");
  }
}

Matrix GaussianPrior::sample(Eigen::Index count, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < mean_.size(); ++j) {
      out(i, j) = mean_[j] + sigma_[j] * rng.normal();
    }
  }
  return out;
}

double GaussianPrior::log_density(const Vector& theta) const {
  const double quad = ((theta - mean_).array() / sigma_.array()).square().sum();
  return -sigma_.array().log().sum() - 0.5 * double(dim()) * kLog2Pi - 0.5 * quad;
}

Vector GaussianPrior::support_lower() const {
  return mean_ - 6.0 * sigma_;
}

Vector GaussianPrior::support_upper() const {
  return mean_ + 6.0 * sigma_;
}

UniformBoxPrior::UniformBoxPrior(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0 ||
      ((upper_ - lower_).array() <= 0.0).any()) {
    throw std::invalid_argument("UniformBoxPrior: bad box");
  }
  log_volume_ = (upper_ - lower_).array().log().sum();
}

Matrix UniformBoxPrior::sample(Eigen::Index count, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < lower_.size(); ++j) {
      out(i, j) = lower_[j] + (upper_[j] - lower_[j]) * rng.uniform();
    }
  }
  return out;
}

double UniformBoxPrior::log_density(const Vector& theta) const {
  if ((theta.array() < lower_.array()).any() ||
      (theta.array() > upper_.array()).any()) {
    return -std::numeric_limits<double>::infinity();
  }
  return -log_volume_;
}

Matrix JointSample::stacked() const {
  Matrix z(theta.rows(), x.cols() + theta.cols());
  z << x, theta;
  return z;
}

JointSample simulate_joint(const Simulator& sim, const PriorSpec& prior,
                           const Vector& design, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("simulate_joint: need n >= 1");
  }
  if (sim.parameter_dim() != prior.dim()) {
    throw std::invalid_argument("simulate_joint: simulator/prior dimension mismatch");
  }
  JointSample out;
  out.master_seed = seed;
  out.theta = prior.sample(n, sub_seed(seed, 0));
  out.x.resize(n, sim.data_dim());

  std::vector<int> failures(std::size_t(n), 0);
  parallel_for(n, [&](Eigen::Index i) {
    Vector theta_i = out.theta.row(i).transpose();
    for (int attempt = 0;; ++attempt) {
      const std::uint64_t draw_seed =
          sub_seed(seed, 1 + std::uint64_t(i) * 16 + std::uint64_t(attempt));
      try {
        const Vector x = sim.run(theta_i, design, draw_seed);
        if (x.allFinite()) {
          out.x.row(i) = x.transpose();
          return;
        }
      } catch (const std::exception&) {
        // fall through to retry
      }
      failures[std::size_t(i)] += 1;
      if (attempt + 1 >= 10) {
        throw std::runtime_error("simulate_joint: simulator failed 10 times for one draw");
      }
      // Re-draw the parameter as well; the failure may be theta-specific.
      Rng retry_rng(sub_seed(seed, 0xf00d + std::uint64_t(i) * 16 + std::uint64_t(attempt)));
      const Matrix fresh = prior.sample(1, retry_rng.next_u64());
      theta_i = fresh.row(0).transpose();
      out.theta.row(i) = theta_i.transpose();
    }
  });
  for (int f : failures) out.simulator_failures += f;
  return out;
}

JointSample marginal_pairs(const JointSample& joint, std::uint64_t seed) {
  if (joint.size() < 2) {
    throw std::invalid_argument("marginal_pairs: need at least 2 pairs");
  }
  Rng rng(seed);
  const auto perm = rng.permutation(joint.size());
  JointSample out;
  out.master_seed = joint.master_seed;
  out.x = joint.x;
  out.theta.resize(joint.theta.rows(), joint.theta.cols());
  for (Eigen::Index i = 0; i < joint.size(); ++i) {
    out.theta.row(i) = joint.theta.row(perm[std::size_t(i)]);
  }
  return out;
}

LossReport lfire_amortised_fit(const JointSample& joint, const JointSample& marginal,
                               LogRatioModel& model, const OptimizerConfig& optimizer) {
  if (joint.size() != marginal.size()) {
    throw std::invalid_argument("lfire_amortised_fit: joint/marginal counts must match (nu = 1)");
  }
  const LabeledTwoSample sample = make_two_sample(joint.stacked(), marginal.stacked());
  const Objective objective = [&](const Vector& w, Vector& grad) {
    model.set_parameters(w);
    const LossReport r = logistic_loss_with_gradient(model, sample);
    grad = r.gradient;
    return r.loss_value;
  };
  const OptimResult res = minimise(objective, model.parameters(), optimizer);
  if (res.diverged) {
    throw std::runtime_error("lfire_amortised_fit: optimizer diverged (" +
                             res.stop_reason + ")");
  }
  model.set_parameters(res.argmin);
  return logistic_loss(model, sample);
}

double PosteriorGrid::cell_volume() const {
  double v = 1.0;
  for (std::size_t d = 0; d < resolution.size(); ++d) {
    v *= (upper[Eigen::Index(d)] - lower[Eigen::Index(d)]) / double(resolution[d]);
  }
  return v;
}

Vector PosteriorGrid::mean() const {
  return points.transpose() * weights;
}

Matrix PosteriorGrid::covariance() const {
  const Vector mu = mean();
  const Matrix centered = points.rowwise() - mu.transpose();
  return centered.transpose() * weights.asDiagonal() * centered;
}

Vector PosteriorGrid::mode() const {
  Eigen::Index best = 0;
  weights.maxCoeff(&best);
  return points.row(best).transpose();
}

double PosteriorGrid::total_variation(const PosteriorGrid& other) const {
  if (weights.size() != other.weights.size()) {
    throw std::invalid_argument("total_variation: grids must share a lattice");
  }
  return 0.5 * (weights - other.weights).cwiseAbs().sum();
}

namespace {

PosteriorGrid make_lattice(const PriorSpec& prior, const std::vector<int>& resolution) {
  if (int(resolution.size()) != prior.dim()) {
    throw std::invalid_argument("posterior grid: resolution rank must match prior dim");
  }
  Eigen::Index total = 1;
  for (int r : resolution) {
    if (r < 1) throw std::invalid_argument("posterior grid: resolution must be >= 1");
    total *= r;
  }
  PosteriorGrid grid;
  grid.lower = prior.support_lower();
  grid.upper = prior.support_upper();
  grid.resolution = resolution;
  grid.points.resize(total, prior.dim());
  // Row-major lattice of cell centres; last dimension varies fastest.
  for (Eigen::Index g = 0; g < total; ++g) {
    Eigen::Index rem = g;
    for (int d = int(resolution.size()) - 1; d >= 0; --d) {
      const Eigen::Index idx = rem % resolution[std::size_t(d)];
      rem /= resolution[std::size_t(d)];
      const double width =
          (grid.upper[d] - grid.lower[d]) / double(resolution[std::size_t(d)]);
      grid.points(g, d) = grid.lower[d] + (double(idx) + 0.5) * width;
    }
  }
  return grid;
}

}  // namespace

PosteriorGrid posterior_from_ratio(const LogRatioModel& ratio, const PriorSpec& prior,
                                   const Vector& x_obs,
                                   const std::vector<int>& resolution) {
  PosteriorGrid grid = make_lattice(prior, resolution);
  const Eigen::Index total = grid.points.rows();
  if (ratio.input_dim() != int(x_obs.size()) + prior.dim()) {
    throw std::invalid_argument("posterior_from_ratio: ratio input dim mismatch");
  }

  Matrix stacked(total, x_obs.size() + prior.dim());
  stacked.leftCols(x_obs.size()).rowwise() = x_obs.transpose();
  stacked.rightCols(prior.dim()) = grid.points;

  Vector log_w = ratio.evaluate_batch(stacked);
  for (Eigen::Index g = 0; g < total; ++g) {
    log_w[g] += prior.log_density(grid.points.row(g).transpose());
  }

  const double log_norm = logsumexp(log_w);
  if (!std::isfinite(log_norm)) {
    throw std::runtime_error(
        "posterior_from_ratio: all grid weights underflowed; max log-weight = " +
        format_double(log_w.maxCoeff()));
  }
  grid.weights = (log_w.array() - log_norm).exp();
  grid.weights /= grid.weights.sum();  // exact renormalisation
  return grid;
}

PosteriorGrid lfire_per_theta_posterior(
    const Simulator& sim, const PriorSpec& prior, const Vector& design,
    const Vector& x_obs, const std::vector<int>& resolution, Eigen::Index n_per_theta,
    const std::function<std::unique_ptr<LogRatioModel>()>& model_factory,
    const OptimizerConfig& optimizer, std::uint64_t seed) {
  PosteriorGrid grid = make_lattice(prior, resolution);
  const Eigen::Index total = grid.points.rows();

  // One marginal bank shared by every per-theta classifier.
  const JointSample marginal_bank =
      simulate_joint(sim, prior, design, n_per_theta, sub_seed(seed, 0));

  Vector log_w(total);
  parallel_for(total, [&](Eigen::Index g) {
    const Vector theta_g = grid.points.row(g).transpose();
    Matrix sims(n_per_theta, sim.data_dim());
    for (Eigen::Index i = 0; i < n_per_theta; ++i) {
      sims.row(i) =
          sim.run(theta_g, design,
                  sub_seed(seed, 1 + std::uint64_t(g) * 0x10000 + std::uint64_t(i)))
              .transpose();
    }
    auto model = model_factory();
    const LabeledTwoSample sample = make_two_sample(sims, marginal_bank.x);
    const Objective objective = [&](const Vector& w, Vector& grad) {
      model->set_parameters(w);
      const LossReport r = logistic_loss_with_gradient(*model, sample);
      grad = r.gradient;
      return r.loss_value;
    };
    const OptimResult res = minimise(objective, model->parameters(), optimizer);
    model->set_parameters(res.argmin);
    log_w[g] = prior.log_density(theta_g) + model->evaluate(x_obs);
  });

  const double log_norm = logsumexp(log_w);
  if (!std::isfinite(log_norm)) {
    throw std::runtime_error("lfire_per_theta_posterior: all grid weights underflowed");
  }
  grid.weights = (log_w.array() - log_norm).exp();
  grid.weights /= grid.weights.sum();
  return grid;
}

void write_posterior_csv(const std::string& path, const PosteriorGrid& grid) {
  std::vector<std::string> header;
  for (Eigen::Index d = 0; d < grid.points.cols(); ++d) {
    header.push_back("theta_" + std::to_string(d));
  }
  header.push_back("weight");
  CsvWriter csv(path, header);
  for (Eigen::Index g = 0; g < grid.points.rows(); ++g) {
    std::vector<std::string> cells;
    for (Eigen::Index d = 0; d < grid.points.cols(); ++d) {
      cells.push_back(format_double(grid.points(g, d)));
    }
    cells.push_back(format_double(grid.weights[g]));
    csv.write_row(cells);
  }
}

void write_joint_csv(const std::string& path, const JointSample& joint) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_joint_csv: cannot open " + path);
  }
  out << "# master_seed=" << joint.master_seed << "\n";
  for (Eigen::Index d = 0; d < joint.theta.cols(); ++d) {
    out << "theta_" << d << ",";
  }
  for (Eigen::Index d = 0; d < joint.x.cols(); ++d) {
    out << "x_" << d << (d + 1 < joint.x.cols() ? "," : "");
  }
  out << "\n";
  for (Eigen::Index i = 0; i < joint.size(); ++i) {
    for (Eigen::Index d = 0; d < joint.theta.cols(); ++d) {
      out << format_double(joint.theta(i, d)) << ",";
    }
    for (Eigen::Index d = 0; d < joint.x.cols(); ++d) {
      out << format_double(joint.x(i, d)) << (d + 1 < joint.x.cols() ? "," : "");
    }
    out << "\n";
  }
}

}  // namespace ctl
