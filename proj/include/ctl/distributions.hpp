#pragma once

#include "ctl/common.hpp"
#include "ctl/quadrature.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace ctl {

// A reference ("noise") distribution: sampleable, with exact normalised
// log-density. Samplers are pure given (count, seed).
class ReferenceDistribution {
 public:
  virtual ~ReferenceDistribution() = default;
  virtual int dim() const = 0;
  virtual Matrix sample(Eigen::Index count, std::uint64_t seed) const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual Vector log_density_batch(const Matrix& X) const;
  virtual std::string description() const = 0;
};

class DiagonalGaussian final : public ReferenceDistribution {
 public:
  DiagonalGaussian(Vector mean, Vector sigma);
  static DiagonalGaussian isotropic(int dim, double mean, double sigma);
  static DiagonalGaussian standard(int dim);

  int dim() const override { return int(mean_.size()); }
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override;
  double log_density(const Vector& x) const override;
  Vector log_density_batch(const Matrix& X) const override;
  std::string description() const override;

  const Vector& mean() const { return mean_; }
  const Vector& sigma() const { return sigma_; }

 private:
  Vector mean_;
  Vector sigma_;
  double log_norm_;  // -sum log(sigma_k sqrt(2 pi))
};

// 1-D Gaussian mixture; component weights must sum to 1.
class GaussianMixture1D final : public ReferenceDistribution {
 public:
  GaussianMixture1D(Vector weights, Vector means, Vector sigmas);

  int dim() const override { return 1; }
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override;
  double log_density(const Vector& x) const override;
  std::string description() const override;

 private:
  Vector weights_, means_, sigmas_;
};

// The unnormalised Gaussian toy model exp(-x^2 / (2 sigma^2)) together
// with its known partition function.
struct GaussianToy {
  double sigma = 1.0;

  double energy(double x) const { return x * x / (2.0 * sigma * sigma); }
  double log_partition() const;  // log sqrt(2 pi sigma^2)
};

// Z(sigma) = sqrt(2 pi sigma^2); rejects sigma <= 0.
double gaussian_partition(double sigma);

struct LoglikDecomposition {
  double partition_term = 0.0;  // -(n/2) log(2 pi sigma^2)
  double energy_term = 0.0;     // -(1/(2 sigma^2)) sum x_i^2
  double total = 0.0;
};

LoglikDecomposition gaussian_loglik_decomposition(double sigma, const Vector& data);

// Jensen-Shannon divergence KL(p||m) + KL(q||m), m = (p+q)/2, by
// deterministic quadrature over normalised densities.
double jsd_quadrature(const std::function<double(double)>& log_p,
                      const std::function<double(double)>& log_q,
                      const Quadrature1D& quadrature);

double jsd_quadrature_2d(const std::function<double(const Vector&)>& log_p,
                         const std::function<double(const Vector&)>& log_q,
                         const Quadrature2D& quadrature);

}  // namespace ctl
