#include "ctl/optimize.hpp"

#include "ctl/csv.hpp"

#include <cmath>
#include <stdexcept>

namespace ctl {

namespace {
constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 60;
}  // namespace

OptimResult minimise(const Objective& objective, const Vector& init,
                     const OptimizerConfig& config) {
  if (!(config.step_size > 0.0) || !(config.gradient_tolerance > 0.0)) {
    throw std::invalid_argument("minimise: step size and tolerance must be positive");
  }

  Vector w = init;
  Vector grad(init.size());
  double value = objective(w, grad);
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw std::invalid_argument("minimise: objective non-finite at the initial point");
  }

  OptimResult result;
  result.trace.push_back({value, grad.norm()});

  double step = config.step_size;
  int increase_streak = 0;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const double gnorm = grad.norm();
    if (gnorm < config.gradient_tolerance) {
      result.converged = true;
      result.stop_reason = "gradient tolerance reached";
      break;
    }

    Vector direction = -grad;
    if (config.method == OptimMethod::NormalizedGradientDescent) {
      direction /= gnorm;
    }

    Vector w_next(w.size());
    Vector grad_next(w.size());
    double value_next = 0.0;
    bool accepted = false;

    if (config.line_search) {
      // Backtracking Armijo on the descent direction.
      const double slope = grad.dot(direction);
      double t = step;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        w_next = w + t * direction;
        value_next = objective(w_next, grad_next);
        if (std::isfinite(value_next) && grad_next.allFinite() &&
            value_next <= value + kArmijoSlope * t * slope) {
          accepted = true;
          step = std::min(2.0 * t, config.step_size);
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        result.stop_reason = "line search found no decrease";
        break;
      }
    } else {
      w_next = w + step * direction;
      value_next = objective(w_next, grad_next);
      if (!std::isfinite(value_next) || !grad_next.allFinite()) {
        result.stop_reason = "objective became non-finite; keeping last good state";
        break;
      }
      increase_streak = value_next > value ? increase_streak + 1 : 0;
      if (increase_streak >= config.divergence_patience) {
        result.diverged = true;
        result.stop_reason =
            "objective increased for " + std::to_string(increase_streak) +
            " consecutive steps";
        break;
      }
      accepted = true;
    }

    w.swap(w_next);
    grad.swap(grad_next);
    value = value_next;
    result.trace.push_back({value, grad.norm()});
  }

  if (result.stop_reason.empty()) {
    result.stop_reason = result.converged ? "gradient tolerance reached"
                                          : "iteration limit reached";
  }
  result.argmin = std::move(w);
  result.final_value = value;
  return result;
}

double finite_difference_check(const Objective& objective, const Vector& point,
                               double step) {
  Vector analytic(point.size());
  objective(point, analytic);

  Vector fd(point.size());
  Vector probe = point;
  Vector unused(point.size());
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    const double fp = objective(probe, unused);
    probe[i] = point[i] - step;
    const double fm = objective(probe, unused);
    probe[i] = point[i];
    fd[i] = (fp - fm) / (2.0 * step);
  }

  const double scale = std::max({analytic.cwiseAbs().maxCoeff(),
                                 fd.cwiseAbs().maxCoeff(), 1e-12});
  return (fd - analytic).cwiseAbs().maxCoeff() / scale;
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace) {
  CsvWriter csv(path, {"iteration", "value", "gradient_norm"});
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv.row(double(i), trace[i].value, trace[i].gradient_norm);
  }
}

}  // namespace ctl
