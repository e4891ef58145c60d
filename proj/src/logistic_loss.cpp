#include "ctl/logistic_loss.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace ctl {

LabeledTwoSample make_two_sample(Matrix data, Matrix reference) {
  if (data.rows() == 0 || reference.rows() == 0) {
    throw std::invalid_argument("make_two_sample: both sample sets must be non-empty");
  }
  if (data.cols() != reference.cols() || data.cols() < 1) {
    throw std::invalid_argument("make_two_sample: dimensionality mismatch");
  }
  LabeledTwoSample s;
  s.nu = double(reference.rows()) / double(data.rows());
  s.data_points = std::move(data);
  s.reference_points = std::move(reference);
  return s;
}

namespace {

void check_sample(const LogRatioModel& model, const LabeledTwoSample& sample) {
  if (sample.n() == 0 || sample.m() == 0) {
    throw std::invalid_argument("logistic_loss: empty sample");
  }
  if (sample.data_points.cols() != sample.reference_points.cols()) {
    throw std::invalid_argument("logistic_loss: sample dimensionality mismatch");
  }
  if (model.input_dim() != sample.dim()) {
    throw std::invalid_argument("logistic_loss: model/sample dimensionality mismatch");
  }
  const double nu = double(sample.m()) / double(sample.n());
  if (sample.nu != nu) {
    throw std::invalid_argument("logistic_loss: sample.nu does not equal m/n");
  }
}

struct LossTerms {
  Vector data_terms;  // log(1 + nu e^{-h(x_i)})
  Vector ref_terms;   // log(1 + e^{h(y_j)}/nu)
};

LossTerms per_point_terms(const Vector& h_data, const Vector& h_ref, double log_nu) {
  LossTerms t;
  t.data_terms = log1pexp_vec((log_nu - h_data.array()).matrix());
  t.ref_terms = log1pexp_vec((h_ref.array() - log_nu).matrix());
  return t;
}

LossReport assemble_report(const LossTerms& t, double nu,
                           Eigen::Index n, Eigen::Index m) {
  LossReport r;
  r.nu = nu;
  r.data_term = t.data_terms.mean();
  r.reference_term = nu * t.ref_terms.mean();
  r.loss_value = r.data_term + r.reference_term;
  double var = 0.0;
  if (n > 1) {
    var += (t.data_terms.array() - t.data_terms.mean()).square().sum() /
           double(n - 1) / double(n);
  }
  if (m > 1) {
    var += nu * nu *
           (t.ref_terms.array() - t.ref_terms.mean()).square().sum() /
           double(m - 1) / double(m);
  }
  r.standard_error = std::sqrt(var);
  return r;
}

}  // namespace

double data_term_weight(double h, double nu) {
  return -sigmoid(std::log(nu) - h);
}

double reference_term_weight(double h, double nu) {
  return nu * sigmoid(h - std::log(nu));
}

LossReport logistic_loss(const LogRatioModel& model, const LabeledTwoSample& sample) {
  check_sample(model, sample);
  const double log_nu = std::log(sample.nu);
  const Vector h_data = model.evaluate_batch(sample.data_points);
  const Vector h_ref = model.evaluate_batch(sample.reference_points);
  const LossTerms t = per_point_terms(h_data, h_ref, log_nu);
  return assemble_report(t, sample.nu, sample.n(), sample.m());
}

Vector logistic_loss_gradient(const LogRatioModel& model, const LabeledTwoSample& sample) {
  check_sample(model, sample);
  const double log_nu = std::log(sample.nu);
  const Vector h_data = model.evaluate_batch(sample.data_points);
  const Vector h_ref = model.evaluate_batch(sample.reference_points);

  const Vector data_w = -sigmoid_vec((log_nu - h_data.array()).matrix());
  const Vector ref_w =
      sample.nu * sigmoid_vec((h_ref.array() - log_nu).matrix());

  Vector grad = model.weighted_gradient_sum(sample.data_points, data_w) /
                double(sample.n());
  grad.noalias() += model.weighted_gradient_sum(sample.reference_points, ref_w) /
                    double(sample.m());
  return grad;
}

LossReport logistic_loss_with_gradient(const LogRatioModel& model,
                                       const LabeledTwoSample& sample) {
  check_sample(model, sample);
  const double log_nu = std::log(sample.nu);
  const Vector h_data = model.evaluate_batch(sample.data_points);
  const Vector h_ref = model.evaluate_batch(sample.reference_points);
  const LossTerms t = per_point_terms(h_data, h_ref, log_nu);
  LossReport r = assemble_report(t, sample.nu, sample.n(), sample.m());

  const Vector data_w = -sigmoid_vec((log_nu - h_data.array()).matrix());
  const Vector ref_w =
      sample.nu * sigmoid_vec((h_ref.array() - log_nu).matrix());
  r.gradient = model.weighted_gradient_sum(sample.data_points, data_w) /
               double(sample.n());
  r.gradient.noalias() +=
      model.weighted_gradient_sum(sample.reference_points, ref_w) /
      double(sample.m());
  r.has_gradient = true;
  return r;
}

DensityFn optimal_ratio_oracle(DensityFn log_p, DensityFn log_q) {
  return [log_p = std::move(log_p), log_q = std::move(log_q)](const Vector& x) {
    return log_p(x) - log_q(x);
  };
}

double limiting_loss_at_optimum(const std::function<double(double)>& log_p,
                                const std::function<double(double)>& log_q,
                                double nu, const Quadrature1D& quadrature) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("limiting_loss_at_optimum: nu must be positive");
  }
  const double mass_p =
      quadrature.integrate([&](double x) { return std::exp(log_p(x)); });
  const double mass_q =
      quadrature.integrate([&](double x) { return std::exp(log_q(x)); });
  if (std::abs(mass_p - 1.0) > 1e-6 || std::abs(mass_q - 1.0) > 1e-6) {
    throw std::runtime_error(
        "limiting_loss_at_optimum: quadrature normalisation check failed "
        "(int p = " + std::to_string(mass_p) + ", int q = " + std::to_string(mass_q) +
        "); widen the integration box or refine the rule");
  }
  const double log_nu = std::log(nu);
  // -p log[p/(p+nu q)] = p log1pexp(log nu + lq - lp), and symmetrically
  // for the reference part; both integrands vanish in the tails.
  const double part_p = quadrature.integrate([&](double x) {
    const double lp = log_p(x);
    const double lq = log_q(x);
    const double density = std::exp(lp);
    return density == 0.0 ? 0.0 : density * log1pexp(log_nu + lq - lp);
  });
  const double part_q = quadrature.integrate([&](double x) {
    const double lp = log_p(x);
    const double lq = log_q(x);
    const double density = std::exp(lq);
    return density == 0.0 ? 0.0 : density * log1pexp(lp - log_nu - lq);
  });
  return part_p + nu * part_q;
}

double jsd_from_loss(const LossReport& report) {
  if (report.nu != 1.0) {
    throw std::invalid_argument(
        "jsd_from_loss: the Jensen-Shannon identity requires a nu = 1 loss, got nu = " +
        std::to_string(report.nu));
  }
  return kTwoLog2 - report.loss_value;
}

}  // namespace ctl
