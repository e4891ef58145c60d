#include "ctl/optimize.hpp"
#include "ctl/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctl;

namespace {

Objective shifted_quadratic(const Vector& target) {
  return [target](const Vector& w, Vector& grad) {
    grad = 2.0 * (w - target);
    return (w - target).squaredNorm();
  };
}

Objective rosenbrock() {
  return [](const Vector& w, Vector& grad) {
    const double x = w[0], y = w[1];
    grad.resize(2);
    grad[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    grad[1] = 200.0 * (y - x * x);
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
  };
}

}  // namespace

TEST_SUITE_BEGIN("optimize");

TEST_CASE("gradient descent solves a convex quadratic") {
  Vector target(3);
  target << 1.0, -2.0, 0.5;
  OptimizerConfig config;
  config.max_iterations = 200;
  config.gradient_tolerance = 1e-10;
  const OptimResult res = minimise(shifted_quadratic(target), Vector::Zero(3), config);
  CHECK((res.argmin - target).norm() < 1e-8);
  CHECK(res.trace.size() <= 201);
}

TEST_CASE("normalized gradient descent reaches a tight gradient norm") {
  Vector target(2);
  target << 3.0, -1.0;
  OptimizerConfig config;
  config.method = OptimMethod::NormalizedGradientDescent;
  config.line_search = true;
  config.step_size = 1.0;
  config.max_iterations = 500;
  config.gradient_tolerance = 1e-6;
  const OptimResult res = minimise(shifted_quadratic(target), Vector::Zero(2), config);
  CHECK(res.converged);
  CHECK(res.trace.back().gradient_norm < 1e-6);
}

TEST_CASE("rosenbrock from the classic start") {
  OptimizerConfig config;
  config.max_iterations = 10000;
  config.gradient_tolerance = 1e-9;
  config.step_size = 1.0;
  Vector init(2);
  init << -1.2, 1.0;
  const OptimResult res = minimise(rosenbrock(), init, config);
  CHECK(res.final_value < 1e-6);
  CHECK((res.argmin - Vector::Ones(2)).norm() < 1e-2);
}

TEST_CASE("line search keeps the trace non-increasing") {
  OptimizerConfig config;
  config.max_iterations = 300;
  Vector init(2);
  init << -1.2, 1.0;
  const OptimResult res = minimise(rosenbrock(), init, config);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].value <= res.trace[i - 1].value);
  }
}

TEST_CASE("same configuration gives an identical trace") {
  OptimizerConfig config;
  config.max_iterations = 120;
  Vector init(2);
  init << -1.2, 1.0;
  const OptimResult a = minimise(rosenbrock(), init, config);
  const OptimResult b = minimise(rosenbrock(), init, config);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].value == b.trace[i].value);
    CHECK(a.trace[i].gradient_norm == b.trace[i].gradient_norm);
  }
}

TEST_CASE("divergence guard triggers without line search") {
  // Fixed oversized steps on a quadratic oscillate and grow.
  OptimizerConfig config;
  config.line_search = false;
  config.step_size = 1.5;  // |1 - 2 * 1.5| = 2 > 1 diverges
  config.max_iterations = 200;
  const OptimResult res =
      minimise(shifted_quadratic(Vector::Zero(1)), Vector::Ones(1), config);
  CHECK(res.diverged);
}

TEST_CASE("non-finite initial point is rejected") {
  const Objective bad = [](const Vector& w, Vector& grad) {
    grad = w;
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(minimise(bad, Vector::Zero(1), OptimizerConfig{}),
                  std::invalid_argument);
}

TEST_CASE("finite difference check") {
  SUBCASE("exact gradient of a quadratic") {
    Vector target(4);
    target << 0.3, -1.1, 2.0, 0.0;
    Vector point(4);
    point << 1.0, 0.5, -0.5, 2.0;
    CHECK(finite_difference_check(shifted_quadratic(target), point) < 1e-9);
  }

  SUBCASE("detects a doubled coordinate") {
    Vector target = Vector::Zero(3);
    const Objective corrupted = [target](const Vector& w, Vector& grad) {
      grad = 2.0 * (w - target);
      Eigen::Index top = 0;
      grad.cwiseAbs().maxCoeff(&top);
      grad[top] *= 2.0;
      return (w - target).squaredNorm();
    };
    Vector point(3);
    point << 1.0, 0.2, -0.3;
    CHECK(finite_difference_check(corrupted, point) > 0.4);
  }
}

TEST_SUITE_END();
