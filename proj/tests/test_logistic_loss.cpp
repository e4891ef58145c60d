#include "ctl/distributions.hpp"
#include "ctl/logistic_loss.hpp"
#include "ctl/optimize.hpp"
#include "ctl/random.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace ctl;

namespace {

FunctionRatio constant_ratio(int dim, double value) {
  return {dim, [value](const Vector&) { return value; }, "constant"};
}

LabeledTwoSample gaussian_sample(Eigen::Index n, Eigen::Index m, int dim,
                                 double sigma_p, double sigma_q, std::uint64_t seed) {
  const DiagonalGaussian p = DiagonalGaussian::isotropic(dim, 0.0, sigma_p);
  const DiagonalGaussian q = DiagonalGaussian::isotropic(dim, 0.0, sigma_q);
  return make_two_sample(p.sample(n, sub_seed(seed, 0)), q.sample(m, sub_seed(seed, 1)));
}

std::shared_ptr<FeatureMap> identity_features(int dim) {
  return std::make_shared<LambdaFeatureMap>(
      dim, dim, [](const Vector& x) { return x; }, "identity");
}

// Test-side per-point loss evaluation, used to compare losses on the
// same sample with a paired standard error.
struct PairedLossDiff {
  double diff = 0.0;  // J(other) - J(base)
  double se = 0.0;
};

PairedLossDiff paired_loss_difference(const LogRatioModel& base,
                                      const LogRatioModel& other,
                                      const LabeledTwoSample& sample) {
  const double log_nu = std::log(sample.nu);
  // data: log1pexp(log_nu - h); reference: log1pexp(h - log_nu)
  const Vector da = log1pexp_vec((log_nu - base.evaluate_batch(sample.data_points).array()).matrix());
  const Vector db = log1pexp_vec((log_nu - other.evaluate_batch(sample.data_points).array()).matrix());
  const Vector ra = log1pexp_vec((base.evaluate_batch(sample.reference_points).array() - log_nu).matrix());
  const Vector rb = log1pexp_vec((other.evaluate_batch(sample.reference_points).array() - log_nu).matrix());

  const Vector data_diff = db - da;
  const Vector ref_diff = rb - ra;
  PairedLossDiff out;
  out.diff = data_diff.mean() + sample.nu * ref_diff.mean();
  const double n = double(sample.n());
  const double m = double(sample.m());
  const double var_d =
      (data_diff.array() - data_diff.mean()).square().sum() / (n - 1.0) / n;
  const double var_r =
      (ref_diff.array() - ref_diff.mean()).square().sum() / (m - 1.0) / m;
  out.se = std::sqrt(var_d + sample.nu * sample.nu * var_r);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("logistic_loss");

TEST_CASE("h = 0 with nu = 1 gives exactly 2 log 2") {
  const LabeledTwoSample sample = gaussian_sample(137, 137, 3, 1.0, 2.0, 5);
  const FunctionRatio zero = constant_ratio(3, 0.0);
  const LossReport r = logistic_loss(zero, sample);
  CHECK(std::abs(r.loss_value - kTwoLog2) < 1e-12);
  CHECK(r.data_term == doctest::Approx(kLog2).epsilon(1e-12));
  CHECK(r.reference_term == doctest::Approx(kLog2).epsilon(1e-12));
  CHECK(r.loss_value == r.data_term + r.reference_term);
}

TEST_CASE("h = 0 with nu = 2 gives log 3 + 2 log(3/2)") {
  const LabeledTwoSample sample = gaussian_sample(100, 200, 1, 1.0, 1.0, 6);
  const FunctionRatio zero = constant_ratio(1, 0.0);
  const LossReport r = logistic_loss(zero, sample);
  const double expected = std::log(3.0) + 2.0 * std::log(1.5);
  CHECK(r.loss_value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.909543).epsilon(1e-6));
}

TEST_CASE("oracle ratio of identical gaussians recovers 2 log 2 at scale") {
  const DiagonalGaussian p = DiagonalGaussian::standard(1);
  const auto oracle = optimal_ratio_oracle(
      [&p](const Vector& x) { return p.log_density(x); },
      [&p](const Vector& x) { return p.log_density(x); });
  const FunctionRatio model(1, oracle);
  const LabeledTwoSample sample = gaussian_sample(100000, 100000, 1, 1.0, 1.0, 7);
  const LossReport r = logistic_loss(model, sample);
  CHECK(std::abs(r.loss_value - kTwoLog2) <=
        std::max(3.0 * r.standard_error, 1e-12));
}

TEST_CASE("rejects malformed samples") {
  CHECK_THROWS_AS(make_two_sample(Matrix(0, 1), Matrix::Zero(3, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_two_sample(Matrix::Zero(3, 2), Matrix::Zero(3, 1)),
                  std::invalid_argument);

  const FunctionRatio zero = constant_ratio(2, 0.0);
  const LabeledTwoSample sample = gaussian_sample(10, 10, 1, 1.0, 1.0, 8);
  CHECK_THROWS_AS(logistic_loss(zero, sample), std::invalid_argument);
}

TEST_CASE("loss stays finite for |h| up to 1e4") {
  Rng rng(19);
  const LabeledTwoSample sample = gaussian_sample(64, 64, 1, 1.0, 1.0, 9);
  for (double scale : {1.0, 1e2, 1e4}) {
    const FunctionRatio wild(1, [&rng, scale](const Vector& x) {
      return scale * std::tanh(x[0]) * (x[0] > 0 ? 1.0 : -1.0);
    });
    const LossReport r = logistic_loss(wild, sample);
    CHECK(std::isfinite(r.loss_value));
    CHECK(r.loss_value >= 0.0);
  }
  const FunctionRatio hi = constant_ratio(1, 1e4);
  const FunctionRatio lo = constant_ratio(1, -1e4);
  CHECK(std::isfinite(logistic_loss(hi, sample).loss_value));
  CHECK(std::isfinite(logistic_loss(lo, sample).loss_value));
}

TEST_CASE("gradient of the zero linear model on a mirrored sample") {
  const DiagonalGaussian p = DiagonalGaussian::standard(2);
  const Matrix data = p.sample(500, 21);
  LinearRatioModel model(identity_features(2));
  const LabeledTwoSample sample = make_two_sample(data, -data);
  const Vector grad = logistic_loss_gradient(model, sample);
  const Vector expected = -data.colwise().mean().transpose();
  CHECK((grad - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("analytic gradient matches central differences across model classes") {
  Rng rng(23);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int dim = 1 + int(rng.uniform_below(3));
    const LabeledTwoSample sample =
        gaussian_sample(200, 300, dim, 1.0, 1.5, 100 + std::uint64_t(rep));

    std::unique_ptr<LogRatioModel> model;
    if (rep % 2 == 0) {
      model = std::make_unique<LinearRatioModel>(
          std::make_shared<QuadraticFeatureMap>(dim));
    } else {
      model = std::make_unique<MlpRatioModel>(dim, 6, 1000 + std::uint64_t(rep));
    }
    Vector w(model->parameter_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 0.4 * rng.normal();
    model->set_parameters(w);

    const Objective objective = [&](const Vector& v, Vector& grad) {
      model->set_parameters(v);
      const LossReport r = logistic_loss_with_gradient(*model, sample);
      grad = r.gradient;
      return r.loss_value;
    };
    const double err = finite_difference_check(objective, w, 1e-6);
    CHECK(err < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("gradient vanishes at a fitted optimum") {
  const LabeledTwoSample sample = gaussian_sample(5000, 5000, 1, 1.0, 2.0, 31);
  LinearRatioModel model(std::make_shared<QuadraticFeatureMap>(1));
  const Objective objective = [&](const Vector& v, Vector& grad) {
    model.set_parameters(v);
    const LossReport r = logistic_loss_with_gradient(model, sample);
    grad = r.gradient;
    return r.loss_value;
  };
  OptimizerConfig opt;
  opt.max_iterations = 2000;
  opt.gradient_tolerance = 1e-8;
  const OptimResult res = minimise(objective, Vector::Zero(3), opt);
  CHECK(res.converged);
  CHECK(res.trace.back().gradient_norm < 1e-8);
}

TEST_CASE("optimal ratio oracle closed forms") {
  SUBCASE("identical densities give the zero function") {
    const DiagonalGaussian p = DiagonalGaussian::standard(4);
    const auto oracle =
        optimal_ratio_oracle([&](const Vector& x) { return p.log_density(x); },
                             [&](const Vector& x) { return p.log_density(x); });
    Rng rng(41);
    for (int i = 0; i < 10; ++i) {
      Vector x(4);
      for (int j = 0; j < 4; ++j) x[j] = 3.0 * rng.normal();
      CHECK(oracle(x) == doctest::Approx(0.0).epsilon(1e-14));
    }
  }

  SUBCASE("scale mismatch in 10 dimensions at the origin") {
    const DiagonalGaussian p = DiagonalGaussian::standard(10);
    const DiagonalGaussian q = DiagonalGaussian::isotropic(10, 0.0, 2.0);
    const auto oracle =
        optimal_ratio_oracle([&](const Vector& x) { return p.log_density(x); },
                             [&](const Vector& x) { return q.log_density(x); });
    CHECK(oracle(Vector::Zero(10)) == doctest::Approx(10.0 * kLog2).epsilon(1e-12));
    CHECK(10.0 * kLog2 == doctest::Approx(6.9315).epsilon(1e-4));
  }

  SUBCASE("unit-variance mean shift is linear") {
    // For mean-1 vs mean-0 unit gaussians the quadratics expand to x - 1/2.
    const DiagonalGaussian p = DiagonalGaussian::isotropic(1, 1.0, 1.0);
    const DiagonalGaussian q = DiagonalGaussian::standard(1);
    const auto oracle =
        optimal_ratio_oracle([&](const Vector& x) { return p.log_density(x); },
                             [&](const Vector& x) { return q.log_density(x); });
    for (double x : {-3.0, -0.5, 0.0, 1.0, 2.5}) {
      CHECK(oracle(Vector::Constant(1, x)) ==
            doctest::Approx(x - 0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("limiting loss at the optimum") {
  const Quadrature1D quad = default_density_quadrature(2.0);
  const DiagonalGaussian p = DiagonalGaussian::standard(1);
  const DiagonalGaussian q = DiagonalGaussian::isotropic(1, 0.0, 2.0);
  const auto lp = [&](double x) { return p.log_density(Vector::Constant(1, x)); };
  const auto lq = [&](double x) { return q.log_density(Vector::Constant(1, x)); };

  SUBCASE("identical densities at nu = 1") {
    CHECK(limiting_loss_at_optimum(lp, lp, 1.0, quad) ==
          doctest::Approx(kTwoLog2).epsilon(1e-10));
  }

  SUBCASE("consistent with the independent jsd quadrature") {
    const double loss = limiting_loss_at_optimum(lp, lq, 1.0, quad);
    const double jsd = jsd_quadrature(lp, lq, quad);
    CHECK(std::abs(loss - (kTwoLog2 - jsd)) < 1e-6);
  }

  SUBCASE("identical densities: closed form and monotone growth in nu") {
    double previous = 0.0;
    for (double nu : {1.0, 10.0, 100.0, 1000.0}) {
      const double value = limiting_loss_at_optimum(lp, lp, nu, quad);
      const double closed_form = std::log1p(nu) + nu * std::log1p(1.0 / nu);
      CHECK(value == doctest::Approx(closed_form).epsilon(1e-9));
      CHECK(value > previous);
      previous = value;
    }
  }

  SUBCASE("unnormalised densities are rejected") {
    const auto bad = [&](double x) { return lp(x) + 0.3; };
    CHECK_THROWS_AS(limiting_loss_at_optimum(bad, lq, 1.0, quad), std::runtime_error);
  }
}

TEST_CASE("jsd_from_loss") {
  SUBCASE("identical distributions map to zero") {
    LossReport r;
    r.loss_value = kTwoLog2;
    r.nu = 1.0;
    CHECK(jsd_from_loss(r) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("rejects nu != 1") {
    LossReport r;
    r.loss_value = 1.0;
    r.nu = 2.0;
    CHECK_THROWS_AS(jsd_from_loss(r), std::invalid_argument);
  }

  SUBCASE("oracle ratio matches the quadrature jsd within 3 MC standard errors") {
    const DiagonalGaussian p = DiagonalGaussian::standard(1);
    const DiagonalGaussian q = DiagonalGaussian::isotropic(1, 0.0, 2.0);
    const auto oracle =
        optimal_ratio_oracle([&](const Vector& x) { return p.log_density(x); },
                             [&](const Vector& x) { return q.log_density(x); });
    const FunctionRatio model(1, oracle);
    const LabeledTwoSample sample = gaussian_sample(100000, 100000, 1, 1.0, 2.0, 77);
    const LossReport r = logistic_loss(model, sample);

    const Quadrature1D quad = default_density_quadrature(2.0);
    const double jsd_truth = jsd_quadrature(
        [&](double x) { return p.log_density(Vector::Constant(1, x)); },
        [&](double x) { return q.log_density(Vector::Constant(1, x)); }, quad);
    CHECK(std::abs(jsd_from_loss(r) - jsd_truth) < 3.0 * r.standard_error);
  }
}

TEST_CASE("variational bound: no h beats the quadrature jsd beyond MC error") {
  const DiagonalGaussian p = DiagonalGaussian::standard(1);
  const DiagonalGaussian q = DiagonalGaussian::isotropic(1, 0.0, 2.0);
  const auto lp = [&](const Vector& x) { return p.log_density(x); };
  const auto lq = [&](const Vector& x) { return q.log_density(x); };
  const LabeledTwoSample sample = gaussian_sample(50000, 50000, 1, 1.0, 2.0, 78);

  const Quadrature1D quad = default_density_quadrature(2.0);
  const double jsd_truth = jsd_quadrature(
      [&](double x) { return p.log_density(Vector::Constant(1, x)); },
      [&](double x) { return q.log_density(Vector::Constant(1, x)); }, quad);

  Rng rng(79);
  for (int rep = 0; rep < 10; ++rep) {
    const double a = rng.normal();
    const double b = 0.5 * rng.normal();
    const double c = 0.2 * rng.normal();
    const FunctionRatio model(1, [&, a, b, c](const Vector& x) {
      const double base = rep == 0 ? 0.0 : lp(x) - lq(x);
      return base + 0.3 * (a + b * x[0] + c * x[0] * x[0]);
    });
    const LossReport r = logistic_loss(model, sample);
    CHECK(jsd_from_loss(r) <= jsd_truth + 3.0 * r.standard_error);
  }
}

TEST_CASE("oracle ratio minimises the loss against perturbations") {
  const DiagonalGaussian p = DiagonalGaussian::standard(1);
  const DiagonalGaussian q = DiagonalGaussian::isotropic(1, 0.0, 2.0);
  const auto oracle =
      optimal_ratio_oracle([&](const Vector& x) { return p.log_density(x); },
                           [&](const Vector& x) { return q.log_density(x); });
  const FunctionRatio base(1, oracle);
  const LabeledTwoSample sample = gaussian_sample(100000, 100000, 1, 1.0, 2.0, 80);

  Rng rng(81);
  for (int rep = 0; rep < 50; ++rep) {
    Vector coef(3);
    for (int i = 0; i < 3; ++i) coef[i] = rng.normal();
    coef *= 0.1 / coef.norm();  // perturbation magnitude 0.1
    const FunctionRatio perturbed(1, [&, coef](const Vector& x) {
      return oracle(x) + coef[0] + coef[1] * x[0] + coef[2] * x[0] * x[0];
    });
    const PairedLossDiff diff = paired_loss_difference(base, perturbed, sample);
    CHECK(diff.diff >= -3.0 * diff.se);
  }
}

TEST_CASE("label symmetry") {
  const LabeledTwoSample sample = gaussian_sample(400, 800, 2, 1.0, 1.7, 90);
  const DiagonalGaussian p = DiagonalGaussian::standard(2);
  const DiagonalGaussian q = DiagonalGaussian::isotropic(2, 0.0, 1.7);
  const FunctionRatio h(2, [&](const Vector& x) {
    return p.log_density(x) - q.log_density(x);
  });
  const FunctionRatio h_neg(2, [&](const Vector& x) {
    return q.log_density(x) - p.log_density(x);
  });

  const LossReport forward = logistic_loss(h, sample);
  const LabeledTwoSample swapped =
      make_two_sample(sample.reference_points, sample.data_points);
  const LossReport backward = logistic_loss(h_neg, swapped);

  // Totals n J and m J' coincide; with nu = 1 the normalised losses do too.
  const double total_forward = double(sample.n()) * forward.loss_value;
  const double total_backward = double(swapped.n()) * backward.loss_value;
  CHECK(total_forward == doctest::Approx(total_backward).epsilon(1e-13));

  const LabeledTwoSample balanced = gaussian_sample(500, 500, 2, 1.0, 1.7, 91);
  const LabeledTwoSample balanced_swapped =
      make_two_sample(balanced.reference_points, balanced.data_points);
  CHECK(logistic_loss(h, balanced).loss_value ==
        doctest::Approx(logistic_loss(h_neg, balanced_swapped).loss_value)
            .epsilon(1e-15));
}

TEST_CASE("gradient weight limits for large nu") {
  // For h in [-5, 0] the weights reach their nu -> inf limits at nu = 1e3.
  for (double h = -5.0; h <= 0.0; h += 0.25) {
    CHECK(std::abs(data_term_weight(h, 1e3) + 1.0) < 1e-3);
    const double rel = std::abs(reference_term_weight(h, 1e3) / std::exp(h) - 1.0);
    CHECK(rel < 1e-3);
  }
  // Weights are bounded in (-1, 0) and (0, nu) respectively.
  for (double h : {-20.0, -1.0, 0.0, 1.0, 20.0}) {
    for (double nu : {0.5, 1.0, 10.0}) {
      CHECK(data_term_weight(h, nu) > -1.0);
      CHECK(data_term_weight(h, nu) < 0.0);
      CHECK(reference_term_weight(h, nu) > 0.0);
      CHECK(reference_term_weight(h, nu) < nu);
    }
  }
}

TEST_SUITE_END();
