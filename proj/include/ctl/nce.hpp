#pragma once

#include "ctl/distributions.hpp"
#include "ctl/logistic_loss.hpp"
#include "ctl/optimize.hpp"
#include "ctl/ratio_model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctl {

// Unnormalised model phi(x; theta) = exp(-E(x; theta)).
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual int dim() const = 0;
  virtual Eigen::Index parameter_count() const = 0;
  virtual const Vector& theta() const = 0;
  virtual void set_theta(const Vector& theta) = 0;

  virtual double energy(const Vector& x) const = 0;
  // d E(x; theta) / d theta
  virtual Vector energy_parameter_gradient(const Vector& x) const = 0;

  virtual Vector energy_batch(const Matrix& X) const;
  // sum_i coeffs[i] * energy_parameter_gradient(X.row(i))
  virtual Vector weighted_energy_gradient_sum(const Matrix& X, const Vector& coeffs) const;

  virtual std::unique_ptr<EnergyModel> clone() const = 0;
  virtual std::string description() const = 0;
};

// Energy family with analytic normalisation and exact sampling;
// required by the iterative scheme and the likelihood-gradient checks.
class SampleableEnergyModel : public EnergyModel {
 public:
  virtual double log_partition() const = 0;
  virtual Vector log_partition_gradient() const = 0;
  virtual Matrix sample(Eigen::Index count, std::uint64_t seed) const = 0;

  double normalized_log_density(const Vector& x) const {
    return -energy(x) - log_partition();
  }
  std::unique_ptr<SampleableEnergyModel> clone_sampleable() const;
};

// Isotropic Gaussian scale family: E(x; sigma) = |x|^2 / (2 sigma^2),
// Z(sigma) = (2 pi sigma^2)^{d/2}. Energies are +inf for sigma <= 0 so
// that line searches reject infeasible steps.
class GaussianScaleEnergy final : public SampleableEnergyModel {
 public:
  GaussianScaleEnergy(int dim, double sigma);

  int dim() const override { return dim_; }
  Eigen::Index parameter_count() const override { return 1; }
  const Vector& theta() const override { return theta_; }
  void set_theta(const Vector& theta) override;

  double energy(const Vector& x) const override;
  Vector energy_parameter_gradient(const Vector& x) const override;
  Vector energy_batch(const Matrix& X) const override;
  Vector weighted_energy_gradient_sum(const Matrix& X, const Vector& coeffs) const override;

  double log_partition() const override;
  Vector log_partition_gradient() const override;
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override;

  std::unique_ptr<EnergyModel> clone() const override;
  std::string description() const override;

  double sigma() const { return theta_[0]; }

 private:
  int dim_;
  Vector theta_;
};

// phi scaled by a constant factor exp(log_scale); used to verify that
// rescaling only shifts the estimated log-normaliser.
class ScaledEnergyModel final : public EnergyModel {
 public:
  ScaledEnergyModel(std::unique_ptr<EnergyModel> inner, double log_scale);

  int dim() const override { return inner_->dim(); }
  Eigen::Index parameter_count() const override { return inner_->parameter_count(); }
  const Vector& theta() const override { return inner_->theta(); }
  void set_theta(const Vector& theta) override { inner_->set_theta(theta); }
  double energy(const Vector& x) const override { return inner_->energy(x) - log_scale_; }
  Vector energy_parameter_gradient(const Vector& x) const override {
    return inner_->energy_parameter_gradient(x);
  }
  Vector energy_batch(const Matrix& X) const override {
    return inner_->energy_batch(X).array() - log_scale_;
  }
  Vector weighted_energy_gradient_sum(const Matrix& X, const Vector& c) const override {
    return inner_->weighted_energy_gradient_sum(X, c);
  }
  std::unique_ptr<EnergyModel> clone() const override;
  std::string description() const override;

 private:
  std::unique_ptr<EnergyModel> inner_;
  double log_scale_;
};

// Snapshot of a normalised sampleable model, usable as the reference
// distribution of the next round.
class EnergyModelReference final : public ReferenceDistribution {
 public:
  explicit EnergyModelReference(const SampleableEnergyModel& model);

  int dim() const override { return model_->dim(); }
  Matrix sample(Eigen::Index count, std::uint64_t seed) const override {
    return model_->sample(count, seed);
  }
  double log_density(const Vector& x) const override {
    return model_->normalized_log_density(x);
  }
  Vector log_density_batch(const Matrix& X) const override;
  std::string description() const override;

 private:
  std::shared_ptr<const SampleableEnergyModel> model_;
};

// Ratio model h(x; theta, c) = -E(x; theta) - log q(x) + c over the
// stacked parameter vector [theta, c].
class NceRatioModel final : public LogRatioModel {
 public:
  NceRatioModel(std::unique_ptr<EnergyModel> energy,
                std::shared_ptr<const ReferenceDistribution> reference,
                double c = 0.0);

  int input_dim() const override { return energy_->dim(); }
  Eigen::Index parameter_count() const override { return params_.size(); }
  const Vector& parameters() const override { return params_; }
  void set_parameters(const Vector& w) override;

  double evaluate(const Vector& x) const override;
  Vector parameter_gradient(const Vector& x) const override;
  Vector evaluate_batch(const Matrix& X) const override;
  Vector weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const override;

  std::unique_ptr<LogRatioModel> clone() const override;
  std::string description() const override;

  const EnergyModel& energy_model() const { return *energy_; }
  double c() const { return params_[params_.size() - 1]; }

 private:
  std::unique_ptr<EnergyModel> energy_;
  std::shared_ptr<const ReferenceDistribution> reference_;
  Vector params_;  // [theta, c]
};

NceRatioModel nce_ratio_model(const EnergyModel& model,
                              std::shared_ptr<const ReferenceDistribution> reference,
                              double c = 0.0);

struct NceEstimate {
  Vector theta_hat;
  double c_hat = 0.0;
  double final_loss = 0.0;
  std::vector<TracePoint> trajectory;
  std::uint64_t reference_seed = 0;
  double nu = 1.0;
  bool converged = false;

  std::string to_json() const;
};

struct NceFitConfig {
  double nu = 1.0;
  OptimizerConfig optimizer;
  double initial_c = 0.0;
};

// Noise-contrastive estimation: minimises the logistic loss over
// (theta, c) against m = round(nu n) reference samples drawn once with
// the recorded seed. Throws on optimizer divergence.
NceEstimate nce_fit(const EnergyModel& model, const Matrix& data,
                    std::shared_ptr<const ReferenceDistribution> reference,
                    const NceFitConfig& config, std::uint64_t seed);

// Refits with the round-t model as round-(t+1) reference. Round 0 uses
// `initial_reference`. The model family must be sampleable.
std::vector<NceEstimate> iterative_nce(
    const SampleableEnergyModel& model, const Matrix& data, int rounds,
    int steps_per_round, const NceFitConfig& config,
    std::shared_ptr<const ReferenceDistribution> initial_reference,
    std::uint64_t seed);

struct MleEquivalenceReport {
  double b_t = 0.0;          // c + log Z(theta_t), measured
  bool b_zero = false;       // |b_t| below tolerance; assertion only runs then
  double nu = 1.0;
  double scale_factor = 0.0;  // nu / (1 + nu)
  Vector nce_gradient;               // theta block of the NCE loss gradient
  Vector mle_gradient_mc;            // -grad log-likelihood, fresh-sample MC
  Vector mle_gradient_exact;         // -grad log-likelihood, analytic partition term
  Vector partition_gradient_mc;      // (1/m) sum grad log phi(y'_k)
  Vector partition_gradient_exact;   // grad log Z(theta_t)
  Vector difference;                 // nce - scale * mle_mc
  Vector combined_se;                // per-coordinate MC standard error of difference
  bool within_3se = false;
  bool assertion_checked = false;
};

// Checks the identity grad J = [nu/(1+nu)] * (-grad log-likelihood)
// when the reference equals the current model and b_t = 0. Data and
// reference banks are drawn from the model at theta_t.
MleEquivalenceReport mle_gradient_equivalence_check(
    const SampleableEnergyModel& model, const Vector& theta_t, Eigen::Index n,
    Eigen::Index m, std::uint64_t seed, std::optional<double> c_override = {});

struct LargeNuRow {
  double nu = 0.0;
  double gradient_deviation = 0.0;  // max-norm vs the importance-sampled target
};

struct LargeNuReport {
  std::vector<LargeNuRow> rows;
  Vector is_target;           // -(1/n) sum grad log phi(x) + (1/M) sum e^h grad log phi(y)
  double effective_sample_size = 0.0;
  bool weights_degenerate = false;  // ESS < 10
};

// Convergence of the NCE gradient (c = 0, h = log phi - log q) to the
// importance-sampled likelihood gradient as nu grows; uses nested
// prefixes of one fixed reference bank.
LargeNuReport large_nu_gradient_check(const EnergyModel& model, const Matrix& data,
                                      const ReferenceDistribution& reference,
                                      const std::vector<double>& nu_list,
                                      std::uint64_t seed);

}  // namespace ctl
