#include "ctl/telescoping.hpp"

#include "ctl/csv.hpp"
#include "ctl/distributions.hpp"
#include "ctl/parallel.hpp"
#include "ctl/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace ctl {

namespace {

Matrix shuffled_rows(const Matrix& X, std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = rng.permutation(X.rows());
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.row(i) = X.row(perm[std::size_t(i)]);
  }
  return out;
}

}  // namespace

WaymarkChain build_waymarks(const Matrix& data, const Matrix& reference, int K,
                            const std::string& scheme, std::uint64_t seed,
                            const Vector* custom_schedule) {
  if (K < 1) {
    throw std::invalid_argument(
        "build_waymarks: K must be >= 1; for K = 0 fit a single ratio directly");
  }
  if (data.cols() != reference.cols() || data.cols() < 1) {
    throw std::invalid_argument("build_waymarks: dimensionality mismatch");
  }
  if (data.rows() == 0 || reference.rows() == 0) {
    throw std::invalid_argument("build_waymarks: empty sample set");
  }
  if (scheme != "linear-combination") {
    throw std::invalid_argument("build_waymarks: unknown scheme '" + scheme + "'");
  }

  WaymarkChain chain;
  chain.K = K;
  chain.scheme = scheme;

  if (custom_schedule != nullptr) {
    if (custom_schedule->size() != K + 2) {
      throw std::invalid_argument("build_waymarks: schedule must have K + 2 entries");
    }
    if ((*custom_schedule)[0] != 0.0 || (*custom_schedule)[K + 1] != 1.0) {
      throw std::invalid_argument("build_waymarks: schedule endpoints must be 0 and 1");
    }
    for (Eigen::Index i = 1; i < custom_schedule->size(); ++i) {
      if (!((*custom_schedule)[i] > (*custom_schedule)[i - 1])) {
        throw std::invalid_argument("build_waymarks: schedule must be strictly increasing");
      }
    }
    chain.schedule = *custom_schedule;
  } else {
    chain.schedule.resize(K + 2);
    for (int k = 0; k <= K + 1; ++k) {
      chain.schedule[k] = double(k) / double(K + 1);
    }
  }

  const Matrix x = shuffled_rows(data, sub_seed(seed, 0));
  const Matrix y = shuffled_rows(reference, sub_seed(seed, 1));
  const Eigen::Index pairs = std::min(x.rows(), y.rows());
  chain.truncated = x.rows() != y.rows();

  chain.samples.reserve(std::size_t(K) + 2);
  for (int k = 0; k <= K + 1; ++k) {
    const double alpha = chain.schedule[k];
    const double keep = std::sqrt(1.0 - alpha * alpha);
    chain.samples.push_back(keep * x.topRows(pairs) + alpha * y.topRows(pairs));
  }
  return chain;
}

double BridgeEstimate::evaluate(const Vector& x) const {
  double acc = 0.0;
  for (const auto& bridge : bridges) {
    acc += bridge->evaluate(x);
  }
  return acc;
}

Vector BridgeEstimate::evaluate_batch(const Matrix& X) const {
  Vector acc = Vector::Zero(X.rows());
  for (const auto& bridge : bridges) {
    acc += bridge->evaluate_batch(X);
  }
  return acc;
}

BridgeEstimate tre_fit(const WaymarkChain& chain, const RatioModelFactory& factory,
                       const OptimizerConfig& optimizer) {
  if (chain.samples.size() != std::size_t(chain.K) + 2) {
    throw std::invalid_argument("tre_fit: malformed chain");
  }
  const int bridges = chain.K + 1;

  BridgeEstimate estimate;
  estimate.bridges.resize(std::size_t(bridges));
  estimate.bridge_losses.resize(std::size_t(bridges));
  for (int k = 0; k < bridges; ++k) {
    estimate.bridges[std::size_t(k)] = std::shared_ptr<LogRatioModel>(factory(k));
  }

  std::vector<std::string> failures(static_cast<std::size_t>(bridges));
  parallel_for(
      bridges,
      [&](Eigen::Index k) {
        auto& model = *estimate.bridges[std::size_t(k)];
        const LabeledTwoSample sample = make_two_sample(
            chain.samples[std::size_t(k)], chain.samples[std::size_t(k) + 1]);
        const Objective objective = [&](const Vector& w, Vector& grad) {
          model.set_parameters(w);
          const LossReport r = logistic_loss_with_gradient(model, sample);
          grad = r.gradient;
          return r.loss_value;
        };
        const OptimResult res = minimise(objective, model.parameters(), optimizer);
        if (res.diverged) {
          failures[std::size_t(k)] = res.stop_reason;
          return;
        }
        model.set_parameters(res.argmin);
        estimate.bridge_losses[std::size_t(k)] = logistic_loss(model, sample);
      },
      1);

  for (int k = 0; k < bridges; ++k) {
    if (!failures[std::size_t(k)].empty()) {
      throw std::runtime_error("tre_fit: bridge " + std::to_string(k) +
                               " diverged (" + failures[std::size_t(k)] + ")");
    }
  }
  return estimate;
}

GaussianScaleRatio::GaussianScaleRatio(int dim, double base_variance, double u)
    : dim_(dim), base_variance_(base_variance) {
  if (dim < 1 || !(base_variance > 0.0)) {
    throw std::invalid_argument("GaussianScaleRatio: need dim >= 1 and base_variance > 0");
  }
  u_ = Vector::Constant(1, u);
}

void GaussianScaleRatio::set_parameters(const Vector& w) {
  if (w.size() != 1) {
    throw std::invalid_argument("GaussianScaleRatio: parameter must be 1-D");
  }
  u_ = w;
}

double GaussianScaleRatio::offset(double u) const {
  const double t = 1.0 + 2.0 * u * base_variance_;
  if (!(t > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -0.5 * double(dim_) * std::log(t);
}

double GaussianScaleRatio::offset_gradient(double u) const {
  const double t = 1.0 + 2.0 * u * base_variance_;
  if (!(t > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -double(dim_) * base_variance_ / t;
}

double GaussianScaleRatio::evaluate(const Vector& x) const {
  return u() * x.squaredNorm() + offset(u());
}

Vector GaussianScaleRatio::parameter_gradient(const Vector& x) const {
  return Vector::Constant(1, x.squaredNorm() + offset_gradient(u()));
}

Vector GaussianScaleRatio::evaluate_batch(const Matrix& X) const {
  return (u() * X.rowwise().squaredNorm().array() + offset(u())).matrix();
}

Vector GaussianScaleRatio::weighted_gradient_sum(const Matrix& X,
                                                 const Vector& coeffs) const {
  const double acc = coeffs.dot(X.rowwise().squaredNorm());
  return Vector::Constant(1, acc + offset_gradient(u()) * coeffs.sum());
}

std::unique_ptr<LogRatioModel> GaussianScaleRatio::clone() const {
  return std::make_unique<GaussianScaleRatio>(*this);
}

std::string GaussianScaleRatio::description() const {
  return "gaussian scale ratio, d = " + std::to_string(dim_) +
         ", base variance = " + format_double(base_variance_);
}

namespace {

double loss_at_u(GaussianScaleRatio& model, const LabeledTwoSample& sample, double u) {
  model.set_parameters(Vector::Constant(1, u));
  return logistic_loss(model, sample).loss_value;
}

double second_difference(GaussianScaleRatio& model, const LabeledTwoSample& sample,
                         double u, double delta) {
  const double plus = loss_at_u(model, sample, u + delta);
  const double centre = loss_at_u(model, sample, u);
  const double minus = loss_at_u(model, sample, u - delta);
  return (plus - 2.0 * centre + minus) / (delta * delta);
}

}  // namespace

std::vector<ChasmRow> chasm_experiment(const ChasmConfig& config, std::uint64_t seed) {
  if (config.alphas.empty() || config.seeds < 1) {
    throw std::invalid_argument("chasm_experiment: nothing to run");
  }
  const Eigen::Index tasks =
      Eigen::Index(config.alphas.size()) * config.seeds;
  std::vector<ChasmRow> rows(std::size_t(tasks) * 2);

  parallel_for(
      tasks,
      [&](Eigen::Index task) {
        const std::size_t alpha_idx = std::size_t(task) / std::size_t(config.seeds);
        const int seed_idx = int(std::size_t(task) % std::size_t(config.seeds));
        const double alpha = config.alphas[alpha_idx];
        const std::uint64_t task_seed = sub_seed(seed, std::uint64_t(task));

        const DiagonalGaussian p = DiagonalGaussian::standard(config.dim);
        const DiagonalGaussian q =
            DiagonalGaussian::isotropic(config.dim, 0.0, alpha);
        const Matrix data = p.sample(config.n, sub_seed(task_seed, 0));
        const Matrix reference = q.sample(config.n, sub_seed(task_seed, 1));
        const double u_true = 0.5 / (alpha * alpha) - 0.5;

        // Single-ratio fit over the full gap.
        ChasmRow single;
        single.alpha = alpha;
        single.seed = std::uint64_t(seed_idx);
        single.method = "single";
        single.K = 0;
        {
          GaussianScaleRatio model(config.dim, 1.0);
          const LabeledTwoSample sample = make_two_sample(data, reference);
          const Objective objective = [&](const Vector& w, Vector& grad) {
            model.set_parameters(w);
            const LossReport r = logistic_loss_with_gradient(model, sample);
            grad = r.gradient;
            return r.loss_value;
          };
          const OptimResult res =
              minimise(objective, Vector::Zero(1), config.optimizer);
          model.set_parameters(res.argmin);
          single.param_error = std::abs(res.argmin[0] - u_true);
          single.final_loss = res.final_value;
          single.curvature_proxy =
              second_difference(model, sample, u_true, config.curvature_delta);
        }

        // Telescoping fit over the waymark chain.
        ChasmRow tre;
        tre.alpha = alpha;
        tre.seed = std::uint64_t(seed_idx);
        tre.method = "tre";
        tre.K = config.K;
        {
          const WaymarkChain chain = build_waymarks(
              data, reference, config.K, "linear-combination", sub_seed(task_seed, 2));
          // Waymark k of two centred Gaussians is Gaussian with variance
          // (1 - a^2) + a^2 alpha^2; use it as each bridge's base.
          Vector variances(config.K + 2);
          for (int k = 0; k <= config.K + 1; ++k) {
            const double a = chain.schedule[k];
            variances[k] = (1.0 - a * a) + a * a * alpha * alpha;
          }
          const RatioModelFactory factory = [&](int k) {
            return std::make_unique<GaussianScaleRatio>(config.dim, variances[k]);
          };
          const BridgeEstimate fit = tre_fit(chain, factory, config.optimizer);

          double u_sum = 0.0;
          double loss_sum = 0.0;
          double curvature_sum = 0.0;
          for (int k = 0; k <= config.K; ++k) {
            const auto& bridge = dynamic_cast<const GaussianScaleRatio&>(
                *fit.bridges[std::size_t(k)]);
            u_sum += bridge.u();
            loss_sum += fit.bridge_losses[std::size_t(k)].loss_value;

            const double u_bridge = 0.5 / variances[k + 1] - 0.5 / variances[k];
            GaussianScaleRatio probe(config.dim, variances[k]);
            const LabeledTwoSample bridge_sample = make_two_sample(
                chain.samples[std::size_t(k)], chain.samples[std::size_t(k) + 1]);
            curvature_sum += second_difference(probe, bridge_sample, u_bridge,
                                               config.curvature_delta);
          }
          tre.param_error = std::abs(u_sum - u_true);
          tre.final_loss = loss_sum;
          tre.curvature_proxy = curvature_sum;
        }

        rows[std::size_t(task) * 2] = std::move(single);
        rows[std::size_t(task) * 2 + 1] = std::move(tre);
      },
      1);

  return rows;
}

void write_chasm_csv(const std::string& path, const std::vector<ChasmRow>& rows) {
  CsvWriter csv(path, {"alpha", "seed", "method", "K", "param_error",
                       "curvature_proxy", "final_loss"});
  for (const auto& r : rows) {
    csv.row(r.alpha, static_cast<unsigned long long>(r.seed), r.method, r.K,
            r.param_error, r.curvature_proxy, r.final_loss);
  }
}

}  // namespace ctl
