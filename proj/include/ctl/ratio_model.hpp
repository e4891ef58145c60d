#pragma once

#include "ctl/common.hpp"

#include <functional>
#include <memory>
#include <string>

namespace ctl {

// Feature map for linear-in-features ratio models. map_batch applies
// the map to every row; overrides should vectorise.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual int input_dim() const = 0;
  virtual Eigen::Index feature_dim() const = 0;
  virtual Vector map(const Vector& x) const = 0;
  virtual Matrix map_batch(const Matrix& X) const;
  virtual std::string name() const = 0;
};

// Bias, linear and quadratic monomials: 1, z_i, z_i z_j (i <= j).
class QuadraticFeatureMap final : public FeatureMap {
 public:
  explicit QuadraticFeatureMap(int input_dim);
  int input_dim() const override { return input_dim_; }
  Eigen::Index feature_dim() const override { return feature_dim_; }
  Vector map(const Vector& x) const override;
  Matrix map_batch(const Matrix& X) const override;
  std::string name() const override { return "quadratic"; }

 private:
  int input_dim_;
  Eigen::Index feature_dim_;
};

// 1-D monomials 1, x, ..., x^degree.
class PolynomialFeatureMap1D final : public FeatureMap {
 public:
  explicit PolynomialFeatureMap1D(int degree);
  int input_dim() const override { return 1; }
  Eigen::Index feature_dim() const override { return degree_ + 1; }
  Vector map(const Vector& x) const override;
  Matrix map_batch(const Matrix& X) const override;
  std::string name() const override;

 private:
  int degree_;
};

// User-supplied feature map given as a callable.
class LambdaFeatureMap final : public FeatureMap {
 public:
  LambdaFeatureMap(int input_dim, Eigen::Index feature_dim,
                   std::function<Vector(const Vector&)> fn, std::string name);
  int input_dim() const override { return input_dim_; }
  Eigen::Index feature_dim() const override { return feature_dim_; }
  Vector map(const Vector& x) const override { return fn_(x); }
  std::string name() const override { return name_; }

 private:
  int input_dim_;
  Eigen::Index feature_dim_;
  std::function<Vector(const Vector&)> fn_;
  std::string name_;
};

// A parametric log-ratio h(x; w): the central estimand. Implementations
// must keep evaluate deterministic in (x, w) and parameter_gradient
// consistent with evaluate.
class LogRatioModel {
 public:
  virtual ~LogRatioModel() = default;

  virtual int input_dim() const = 0;
  virtual Eigen::Index parameter_count() const = 0;
  virtual const Vector& parameters() const = 0;
  virtual void set_parameters(const Vector& w) = 0;

  virtual double evaluate(const Vector& x) const = 0;
  virtual Vector parameter_gradient(const Vector& x) const = 0;

  // Batch hooks used by the loss; defaults loop over rows.
  virtual Vector evaluate_batch(const Matrix& X) const;
  // Returns sum_i coeffs[i] * parameter_gradient(X.row(i)).
  virtual Vector weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const;

  virtual std::unique_ptr<LogRatioModel> clone() const = 0;
  virtual std::string description() const = 0;
};

// h(x; w) = w . phi(x) for a fixed feature map phi.
class LinearRatioModel final : public LogRatioModel {
 public:
  explicit LinearRatioModel(std::shared_ptr<const FeatureMap> features);

  int input_dim() const override { return features_->input_dim(); }
  Eigen::Index parameter_count() const override { return weights_.size(); }
  const Vector& parameters() const override { return weights_; }
  void set_parameters(const Vector& w) override;

  double evaluate(const Vector& x) const override;
  Vector parameter_gradient(const Vector& x) const override;
  Vector evaluate_batch(const Matrix& X) const override;
  Vector weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const override;

  std::unique_ptr<LogRatioModel> clone() const override;
  std::string description() const override;

  const FeatureMap& features() const { return *features_; }

 private:
  std::shared_ptr<const FeatureMap> features_;
  Vector weights_;
};

// One-hidden-layer perceptron with tanh units and hand-coded
// backpropagation: h(x) = w2 . tanh(W1 x + b1) + b2.
class MlpRatioModel final : public LogRatioModel {
 public:
  MlpRatioModel(int input_dim, int hidden_units, std::uint64_t init_seed);

  int input_dim() const override { return input_dim_; }
  Eigen::Index parameter_count() const override { return params_.size(); }
  const Vector& parameters() const override { return params_; }
  void set_parameters(const Vector& w) override;

  double evaluate(const Vector& x) const override;
  Vector parameter_gradient(const Vector& x) const override;
  Vector evaluate_batch(const Matrix& X) const override;
  Vector weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const override;

  std::unique_ptr<LogRatioModel> clone() const override;
  std::string description() const override;

  int hidden_units() const { return hidden_; }

 private:
  // Views into the packed parameter vector, ordered [vec(W1), b1, w2, b2].
  Eigen::Map<const Matrix> w1() const;
  Eigen::Map<const Vector> b1() const;
  Eigen::Map<const Vector> w2() const;
  double b2() const { return params_[params_.size() - 1]; }

  int input_dim_;
  int hidden_;
  Vector params_;
};

// Fixed function with no parameters; wraps oracles so they can stand in
// wherever a LogRatioModel is expected.
class FunctionRatio final : public LogRatioModel {
 public:
  FunctionRatio(int input_dim, std::function<double(const Vector&)> fn,
                std::string description = "fixed function");

  int input_dim() const override { return input_dim_; }
  Eigen::Index parameter_count() const override { return 0; }
  const Vector& parameters() const override { return empty_; }
  void set_parameters(const Vector& w) override;

  double evaluate(const Vector& x) const override { return fn_(x); }
  Vector parameter_gradient(const Vector&) const override { return Vector(0); }

  std::unique_ptr<LogRatioModel> clone() const override;
  std::string description() const override { return description_; }

 private:
  int input_dim_;
  std::function<double(const Vector&)> fn_;
  std::string description_;
  Vector empty_;
};

}  // namespace ctl
