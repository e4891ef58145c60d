#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace ctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// log(1 + exp(z)) without overflow for large |z|.
template <typename Scalar>
Scalar log1pexp(Scalar z) {
  if (z > Scalar(0)) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

// 1 / (1 + exp(-z)), evaluated through log1pexp so the tails saturate
// cleanly instead of overflowing.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return std::exp(-log1pexp(-z));
}

// Vectorised log(1 + exp(z_i)) over an array: max(z, 0) + log1p(e^{-|z|}).
inline Vector log1pexp_vec(const Vector& z) {
  const auto a = z.array();
  return (a.max(0.0) + (-a.abs()).exp().log1p()).matrix();
}

// Vectorised logistic sigmoid, stable in both tails.
inline Vector sigmoid_vec(const Vector& z) {
  const auto a = z.array();
  const Eigen::ArrayXd t = (-a.abs()).exp();
  return ((a >= 0.0).select(1.0 / (1.0 + t), t / (1.0 + t))).matrix();
}

inline double logsumexp(const Vector& v) {
  if (v.size() == 0) {
    throw std::invalid_argument("logsumexp: empty vector");
  }
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) {
    return m;  // all -inf (or a nan/inf poisoning the reduction)
  }
  return m + std::log((v.array() - m).exp().sum());
}

inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (!std::isfinite(a)) return a;
  return a + log1pexp(b - a);
}

constexpr double kLog2 = 0.6931471805599453094;
constexpr double kTwoLog2 = 2.0 * kLog2;
constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2Pi = 1.8378770664093454836;

// Sample mean and the standard error of that mean.
struct MeanWithSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanWithSe mean_with_se(const Vector& values) {
  const auto n = values.size();
  if (n == 0) {
    throw std::invalid_argument("mean_with_se: empty vector");
  }
  MeanWithSe out;
  out.mean = values.mean();
  if (n > 1) {
    const double var = (values.array() - out.mean).square().sum() / double(n - 1);
    out.se = std::sqrt(var / double(n));
  }
  return out;
}

}  // namespace ctl
