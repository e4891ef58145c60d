#pragma once

#include "ctl/common.hpp"
#include "ctl/quadrature.hpp"
#include "ctl/ratio_model.hpp"

#include <functional>

namespace ctl {

using DensityFn = std::function<double(const Vector&)>;

// Labelled classification sample: data points carry label 1, reference
// points label 0, nu = m/n.
struct LabeledTwoSample {
  Matrix data_points;       // n x d
  Matrix reference_points;  // m x d
  double nu = 1.0;

  Eigen::Index n() const { return data_points.rows(); }
  Eigen::Index m() const { return reference_points.rows(); }
  int dim() const { return int(data_points.cols()); }
};

// Validates dimensions and computes nu = m/n.
LabeledTwoSample make_two_sample(Matrix data, Matrix reference);

struct LossReport {
  double loss_value = 0.0;
  double data_term = 0.0;       // (1/n) sum log(1 + nu exp(-h(x_i)))
  double reference_term = 0.0;  // (nu/m) sum log(1 + exp(h(y_j))/nu)
  double nu = 1.0;
  double standard_error = 0.0;  // Monte Carlo SE of loss_value over the sample
  bool has_gradient = false;
  Vector gradient;
};

// Per-point weights appearing in the loss gradient. data weight is
// -nu e^{-h} / (1 + nu e^{-h}) in (-1, 0); reference weight is
// e^{h} / (1 + e^{h}/nu) in (0, nu).
double data_term_weight(double h, double nu);
double reference_term_weight(double h, double nu);

// Logistic classification loss J(h) of the model on the sample,
// numerically stable for |h| up to 1e4 and beyond.
LossReport logistic_loss(const LogRatioModel& model, const LabeledTwoSample& sample);

// Gradient of J with respect to the model parameters.
Vector logistic_loss_gradient(const LogRatioModel& model, const LabeledTwoSample& sample);

// Loss and gradient in one pass; used by the fit drivers.
LossReport logistic_loss_with_gradient(const LogRatioModel& model,
                                       const LabeledTwoSample& sample);

// The population-optimal regression function h*(x) = log p(x) - log q(x).
DensityFn optimal_ratio_oracle(DensityFn log_p, DensityFn log_q);

// Limiting loss at the optimum for normalised 1-D densities,
// -int p log[p/(p+nu q)] - nu int q log[nu q/(nu q+p)], by quadrature.
// Throws if either density fails the normalisation check (1 +- 1e-6).
double limiting_loss_at_optimum(const std::function<double(double)>& log_p,
                                const std::function<double(double)>& log_q,
                                double nu, const Quadrature1D& quadrature);

// Variational Jensen-Shannon estimate 2 log 2 - J; a lower bound on
// JSD(p, q), exact at h = h*. Requires a nu = 1 loss.
double jsd_from_loss(const LossReport& report);

}  // namespace ctl
