#include "ctl/distributions.hpp"

#include "ctl/random.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace ctl {

Vector ReferenceDistribution::log_density_batch(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i] = log_density(X.row(i).transpose());
  }
  return out;
}

DiagonalGaussian::DiagonalGaussian(Vector mean, Vector sigma)
    : mean_(std::move(mean)), sigma_(std::move(sigma)) {
  if (mean_.size() != sigma_.size() || mean_.size() == 0) {
    throw std::invalid_argument("DiagonalGaussian: mean/sigma size mismatch");
  }
  if ((sigma_.array() <= 0.0).any()) {
    throw std::invalid_argument("DiagonalGaussian: sigma must be positive");
  }
  log_norm_ = -sigma_.array().log().sum() - 0.5 * double(mean_.size()) * kLog2Pi;
}

DiagonalGaussian DiagonalGaussian::isotropic(int dim, double mean, double sigma) {
  return {Vector::Constant(dim, mean), Vector::Constant(dim, sigma)};
}

DiagonalGaussian DiagonalGaussian::standard(int dim) {
  return isotropic(dim, 0.0, 1.0);
}

Matrix DiagonalGaussian::sample(Eigen::Index count, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < mean_.size(); ++j) {
      out(i, j) = mean_[j] + sigma_[j] * rng.normal();
    }
  }
  return out;
}

double DiagonalGaussian::log_density(const Vector& x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("DiagonalGaussian: dimension mismatch");
  }
  const double quad = ((x - mean_).array() / sigma_.array()).square().sum();
  return log_norm_ - 0.5 * quad;
}

Vector DiagonalGaussian::log_density_batch(const Matrix& X) const {
  if (X.cols() != mean_.size()) {
    throw std::invalid_argument("DiagonalGaussian: dimension mismatch");
  }
  const auto centered = X.rowwise() - mean_.transpose();
  const Vector quad =
      (centered.array().rowwise() / sigma_.transpose().array()).square().rowwise().sum();
  return (log_norm_ - 0.5 * quad.array()).matrix();
}

std::string DiagonalGaussian::description() const {
  return "diagonal gaussian, d = " + std::to_string(dim());
}

GaussianMixture1D::GaussianMixture1D(Vector weights, Vector means, Vector sigmas)
    : weights_(std::move(weights)), means_(std::move(means)), sigmas_(std::move(sigmas)) {
  if (weights_.size() != means_.size() || means_.size() != sigmas_.size() ||
      weights_.size() == 0) {
    throw std::invalid_argument("GaussianMixture1D: component size mismatch");
  }
  if ((weights_.array() <= 0.0).any() || (sigmas_.array() <= 0.0).any()) {
    throw std::invalid_argument("GaussianMixture1D: weights and sigmas must be positive");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("GaussianMixture1D: weights must sum to 1");
  }
}

Matrix GaussianMixture1D::sample(Eigen::Index count, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix out(count, 1);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double u = rng.uniform();
    double cum = 0.0;
    Eigen::Index k = weights_.size() - 1;
    for (Eigen::Index c = 0; c < weights_.size(); ++c) {
      cum += weights_[c];
      if (u <= cum) {
        k = c;
        break;
      }
    }
    out(i, 0) = means_[k] + sigmas_[k] * rng.normal();
  }
  return out;
}

double GaussianMixture1D::log_density(const Vector& x) const {
  if (x.size() != 1) {
    throw std::invalid_argument("GaussianMixture1D: expects 1-D input");
  }
  Vector comps(weights_.size());
  for (Eigen::Index k = 0; k < weights_.size(); ++k) {
    const double z = (x[0] - means_[k]) / sigmas_[k];
    comps[k] = std::log(weights_[k]) - std::log(sigmas_[k]) - 0.5 * kLog2Pi -
               0.5 * z * z;
  }
  return logsumexp(comps);
}

std::string GaussianMixture1D::description() const {
  return "gaussian mixture, " + std::to_string(weights_.size()) + " components";
}

double GaussianToy::log_partition() const {
  return std::log(gaussian_partition(sigma));
}

double gaussian_partition(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_partition: sigma must be positive");
  }
  return std::sqrt(2.0 * kPi * sigma * sigma);
}

LoglikDecomposition gaussian_loglik_decomposition(double sigma, const Vector& data) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_loglik_decomposition: sigma must be positive");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("gaussian_loglik_decomposition: empty data");
  }
  LoglikDecomposition d;
  const double n = double(data.size());
  d.partition_term = -0.5 * n * std::log(2.0 * kPi * sigma * sigma);
  d.energy_term = -data.squaredNorm() / (2.0 * sigma * sigma);
  d.total = d.partition_term + d.energy_term;
  return d;
}

namespace {

double clamp_jsd(double value) {
  if (value < 0.0) return 0.0;
  if (value > kTwoLog2) return kTwoLog2;
  return value;
}

void check_normalised(double mass_p, double mass_q) {
  if (std::abs(mass_p - 1.0) > 1e-6 || std::abs(mass_q - 1.0) > 1e-6) {
    throw std::runtime_error(
        "jsd_quadrature: normalisation check failed (int p = " +
        std::to_string(mass_p) + ", int q = " + std::to_string(mass_q) + ")");
  }
}

// p (lp - lm) with lm = log((p+q)/2); zero where p underflows.
double kl_to_mixture_integrand(double lp, double lq) {
  const double p = std::exp(lp);
  if (p == 0.0) return 0.0;
  const double lm = logaddexp(lp, lq) - kLog2;
  return p * (lp - lm);
}

}  // namespace

double jsd_quadrature(const std::function<double(double)>& log_p,
                      const std::function<double(double)>& log_q,
                      const Quadrature1D& quadrature) {
  const double mass_p =
      quadrature.integrate([&](double x) { return std::exp(log_p(x)); });
  const double mass_q =
      quadrature.integrate([&](double x) { return std::exp(log_q(x)); });
  check_normalised(mass_p, mass_q);
  const double kl_p = quadrature.integrate(
      [&](double x) { return kl_to_mixture_integrand(log_p(x), log_q(x)); });
  const double kl_q = quadrature.integrate(
      [&](double x) { return kl_to_mixture_integrand(log_q(x), log_p(x)); });
  return clamp_jsd(kl_p + kl_q);
}

double jsd_quadrature_2d(const std::function<double(const Vector&)>& log_p,
                         const std::function<double(const Vector&)>& log_q,
                         const Quadrature2D& quadrature) {
  const double mass_p =
      quadrature.integrate([&](const Vector& x) { return std::exp(log_p(x)); });
  const double mass_q =
      quadrature.integrate([&](const Vector& x) { return std::exp(log_q(x)); });
  check_normalised(mass_p, mass_q);
  const double kl_p = quadrature.integrate([&](const Vector& x) {
    return kl_to_mixture_integrand(log_p(x), log_q(x));
  });
  const double kl_q = quadrature.integrate([&](const Vector& x) {
    return kl_to_mixture_integrand(log_q(x), log_p(x));
  });
  return clamp_jsd(kl_p + kl_q);
}

}  // namespace ctl
