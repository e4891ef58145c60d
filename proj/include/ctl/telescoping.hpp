#pragma once

#include "ctl/logistic_loss.hpp"
#include "ctl/optimize.hpp"
#include "ctl/ratio_model.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ctl {

// Chain of waymark sample sets annealing from the data distribution
// (index 0) to the reference (index K+1).
struct WaymarkChain {
  std::vector<Matrix> samples;  // K + 2 sets
  Vector schedule;              // alpha_0 = 0 < ... < alpha_{K+1} = 1
  int K = 0;
  std::string scheme;
  bool truncated = false;  // inputs had unequal counts and were paired up to the minimum
};

// Variance-preserving linear-combination waymarks
// z_k = sqrt(1 - alpha_k^2) x + alpha_k y over independently shuffled,
// index-paired inputs. Default schedule alpha_k = k / (K + 1).
WaymarkChain build_waymarks(const Matrix& data, const Matrix& reference, int K,
                            const std::string& scheme, std::uint64_t seed,
                            const Vector* custom_schedule = nullptr);

// Sum of per-bridge log-ratios; telescopes to the endpoint ratio.
struct BridgeEstimate {
  std::vector<std::shared_ptr<LogRatioModel>> bridges;
  std::vector<LossReport> bridge_losses;  // empty for hand-assembled estimates

  double evaluate(const Vector& x) const;
  Vector evaluate_batch(const Matrix& X) const;
};

using RatioModelFactory = std::function<std::unique_ptr<LogRatioModel>(int bridge_index)>;

// Fits one fresh model per consecutive waymark pair with nu = 1.
// Throws with the bridge index if any bridge fit diverges.
BridgeEstimate tre_fit(const WaymarkChain& chain, const RatioModelFactory& factory,
                       const OptimizerConfig& optimizer);

// One-parameter log-ratio family between isotropic Gaussian scales:
// h(x; u) = u |x|^2 - (d/2) log(1 + 2 u v), the exact log-ratio of
// N(0, v I_d) to N(0, v/(1+2uv) I_d). Evaluation is NaN outside the
// feasible region 1 + 2uv > 0 so line searches back off.
class GaussianScaleRatio final : public LogRatioModel {
 public:
  GaussianScaleRatio(int dim, double base_variance, double u = 0.0);

  int input_dim() const override { return dim_; }
  Eigen::Index parameter_count() const override { return 1; }
  const Vector& parameters() const override { return u_; }
  void set_parameters(const Vector& w) override;

  double evaluate(const Vector& x) const override;
  Vector parameter_gradient(const Vector& x) const override;
  Vector evaluate_batch(const Matrix& X) const override;
  Vector weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const override;

  std::unique_ptr<LogRatioModel> clone() const override;
  std::string description() const override;

  double u() const { return u_[0]; }
  double base_variance() const { return base_variance_; }

 private:
  double offset(double u) const;          // -(d/2) log(1 + 2 u v)
  double offset_gradient(double u) const; // d offset / d u

  int dim_;
  double base_variance_;
  Vector u_;
};

struct ChasmRow {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string method;  // "single" or "tre"
  int K = 0;
  double param_error = 0.0;
  double curvature_proxy = 0.0;
  double final_loss = 0.0;
};

struct ChasmConfig {
  std::vector<double> alphas{2.0, 4.0, 8.0};
  int dim = 10;
  Eigen::Index n = 5000;
  int K = 8;
  int seeds = 20;
  OptimizerConfig optimizer;
  double curvature_delta = 1e-3;
};

// The density-chasm diagnostic: data N(0, I_d) against reference
// N(0, alpha^2 I_d), fitted with the one-parameter squared-norm family
// both directly and through a waymark chain. curvature_proxy is the
// second difference of the method's empirical loss at the true
// parameter; param_error compares the (summed) fitted coefficient with
// the true quadratic coefficient 1/(2 alpha^2) - 1/2.
std::vector<ChasmRow> chasm_experiment(const ChasmConfig& config, std::uint64_t seed);

void write_chasm_csv(const std::string& path, const std::vector<ChasmRow>& rows);

}  // namespace ctl
