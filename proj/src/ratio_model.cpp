#include "ctl/ratio_model.hpp"

#include "ctl/random.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace ctl {

Matrix FeatureMap::map_batch(const Matrix& X) const {
  Matrix F(X.rows(), feature_dim());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    F.row(i) = map(X.row(i).transpose()).transpose();
  }
  return F;
}

QuadraticFeatureMap::QuadraticFeatureMap(int input_dim) : input_dim_(input_dim) {
  if (input_dim < 1) {
    throw std::invalid_argument("QuadraticFeatureMap: input_dim must be >= 1");
  }
  const Eigen::Index d = input_dim;
  feature_dim_ = 1 + d + d * (d + 1) / 2;
}

Vector QuadraticFeatureMap::map(const Vector& x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument("QuadraticFeatureMap: dimension mismatch");
  }
  Vector f(feature_dim_);
  f[0] = 1.0;
  f.segment(1, input_dim_) = x;
  Eigen::Index k = 1 + input_dim_;
  for (int i = 0; i < input_dim_; ++i) {
    for (int j = i; j < input_dim_; ++j) {
      f[k++] = x[i] * x[j];
    }
  }
  return f;
}

Matrix QuadraticFeatureMap::map_batch(const Matrix& X) const {
  if (X.cols() != input_dim_) {
    throw std::invalid_argument("QuadraticFeatureMap: dimension mismatch");
  }
  Matrix F(X.rows(), feature_dim_);
  F.col(0).setOnes();
  F.middleCols(1, input_dim_) = X;
  Eigen::Index k = 1 + input_dim_;
  for (int i = 0; i < input_dim_; ++i) {
    for (int j = i; j < input_dim_; ++j) {
      F.col(k++) = X.col(i).cwiseProduct(X.col(j));
    }
  }
  return F;
}

PolynomialFeatureMap1D::PolynomialFeatureMap1D(int degree) : degree_(degree) {
  if (degree < 0) {
    throw std::invalid_argument("PolynomialFeatureMap1D: degree must be >= 0");
  }
}

Vector PolynomialFeatureMap1D::map(const Vector& x) const {
  if (x.size() != 1) {
    throw std::invalid_argument("PolynomialFeatureMap1D: expects 1-D input");
  }
  Vector f(degree_ + 1);
  f[0] = 1.0;
  for (int k = 1; k <= degree_; ++k) {
    f[k] = f[k - 1] * x[0];
  }
  return f;
}

Matrix PolynomialFeatureMap1D::map_batch(const Matrix& X) const {
  if (X.cols() != 1) {
    throw std::invalid_argument("PolynomialFeatureMap1D: expects 1-D input");
  }
  Matrix F(X.rows(), degree_ + 1);
  F.col(0).setOnes();
  for (int k = 1; k <= degree_; ++k) {
    F.col(k) = F.col(k - 1).cwiseProduct(X.col(0));
  }
  return F;
}

std::string PolynomialFeatureMap1D::name() const {
  return "polynomial-degree-" + std::to_string(degree_);
}

LambdaFeatureMap::LambdaFeatureMap(int input_dim, Eigen::Index feature_dim,
                                   std::function<Vector(const Vector&)> fn,
                                   std::string name)
    : input_dim_(input_dim),
      feature_dim_(feature_dim),
      fn_(std::move(fn)),
      name_(std::move(name)) {}

Vector LogRatioModel::evaluate_batch(const Matrix& X) const {
  Vector h(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    h[i] = evaluate(X.row(i).transpose());
  }
  return h;
}

Vector LogRatioModel::weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const {
  if (X.rows() != coeffs.size()) {
    throw std::invalid_argument("weighted_gradient_sum: row/coefficient count mismatch");
  }
  Vector acc = Vector::Zero(parameter_count());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc.noalias() += coeffs[i] * parameter_gradient(X.row(i).transpose());
  }
  return acc;
}

LinearRatioModel::LinearRatioModel(std::shared_ptr<const FeatureMap> features)
    : features_(std::move(features)) {
  weights_ = Vector::Zero(features_->feature_dim());
}

void LinearRatioModel::set_parameters(const Vector& w) {
  if (w.size() != weights_.size()) {
    throw std::invalid_argument("LinearRatioModel: parameter size mismatch");
  }
  weights_ = w;
}

double LinearRatioModel::evaluate(const Vector& x) const {
  return weights_.dot(features_->map(x));
}

Vector LinearRatioModel::parameter_gradient(const Vector& x) const {
  return features_->map(x);
}

Vector LinearRatioModel::evaluate_batch(const Matrix& X) const {
  return features_->map_batch(X) * weights_;
}

Vector LinearRatioModel::weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const {
  return features_->map_batch(X).transpose() * coeffs;
}

std::unique_ptr<LogRatioModel> LinearRatioModel::clone() const {
  return std::make_unique<LinearRatioModel>(*this);
}

std::string LinearRatioModel::description() const {
  return "linear in " + features_->name() + " features";
}

MlpRatioModel::MlpRatioModel(int input_dim, int hidden_units, std::uint64_t init_seed)
    : input_dim_(input_dim), hidden_(hidden_units) {
  if (input_dim < 1 || hidden_units < 1) {
    throw std::invalid_argument("MlpRatioModel: need input_dim >= 1 and hidden_units >= 1");
  }
  params_.resize(Eigen::Index(hidden_) * input_dim_ + 2 * hidden_ + 1);
  Rng rng(init_seed);
  const double w1_scale = 1.0 / std::sqrt(double(input_dim_));
  const double w2_scale = 1.0 / std::sqrt(double(hidden_));
  Eigen::Index k = 0;
  for (; k < Eigen::Index(hidden_) * input_dim_; ++k) {
    params_[k] = w1_scale * rng.normal();
  }
  for (Eigen::Index i = 0; i < hidden_; ++i) {
    params_[k++] = 0.0;  // b1
  }
  for (Eigen::Index i = 0; i < hidden_; ++i) {
    params_[k++] = w2_scale * rng.normal();
  }
  params_[k] = 0.0;  // b2
}

Eigen::Map<const Matrix> MlpRatioModel::w1() const {
  return {params_.data(), hidden_, input_dim_};
}

Eigen::Map<const Vector> MlpRatioModel::b1() const {
  return {params_.data() + Eigen::Index(hidden_) * input_dim_, hidden_};
}

Eigen::Map<const Vector> MlpRatioModel::w2() const {
  return {params_.data() + Eigen::Index(hidden_) * input_dim_ + hidden_, hidden_};
}

void MlpRatioModel::set_parameters(const Vector& w) {
  if (w.size() != params_.size()) {
    throw std::invalid_argument("MlpRatioModel: parameter size mismatch");
  }
  params_ = w;
}

double MlpRatioModel::evaluate(const Vector& x) const {
  const Vector a = (w1() * x + b1()).array().tanh().matrix();
  return w2().dot(a) + b2();
}

Vector MlpRatioModel::parameter_gradient(const Vector& x) const {
  const Vector pre = w1() * x + b1();
  const Vector a = pre.array().tanh().matrix();
  const Vector da = (1.0 - a.array().square()).matrix();  // tanh'
  const Vector g_pre = w2().cwiseProduct(da);

  Vector grad(params_.size());
  Eigen::Map<Matrix> gW1(grad.data(), hidden_, input_dim_);
  gW1.noalias() = g_pre * x.transpose();
  grad.segment(Eigen::Index(hidden_) * input_dim_, hidden_) = g_pre;
  grad.segment(Eigen::Index(hidden_) * input_dim_ + hidden_, hidden_) = a;
  grad[grad.size() - 1] = 1.0;
  return grad;
}

Vector MlpRatioModel::evaluate_batch(const Matrix& X) const {
  Matrix A = (X * w1().transpose()).rowwise() + b1().transpose();
  A = A.array().tanh().matrix();
  return (A * w2()).array() + b2();
}

Vector MlpRatioModel::weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const {
  if (X.rows() != coeffs.size()) {
    throw std::invalid_argument("weighted_gradient_sum: row/coefficient count mismatch");
  }
  Matrix A = (X * w1().transpose()).rowwise() + b1().transpose();
  A = A.array().tanh().matrix();
  // d(sum_i c_i h_i)/d(pre-activation): (c w2^T) o (1 - A^2)
  const Matrix G = (coeffs * w2().transpose()).cwiseProduct(
      (1.0 - A.array().square()).matrix());

  Vector grad(params_.size());
  Eigen::Map<Matrix> gW1(grad.data(), hidden_, input_dim_);
  gW1.noalias() = G.transpose() * X;
  grad.segment(Eigen::Index(hidden_) * input_dim_, hidden_) = G.colwise().sum().transpose();
  grad.segment(Eigen::Index(hidden_) * input_dim_ + hidden_, hidden_) =
      A.transpose() * coeffs;
  grad[grad.size() - 1] = coeffs.sum();
  return grad;
}

std::unique_ptr<LogRatioModel> MlpRatioModel::clone() const {
  return std::make_unique<MlpRatioModel>(*this);
}

std::string MlpRatioModel::description() const {
  return "mlp tanh, " + std::to_string(hidden_) + " hidden units";
}

FunctionRatio::FunctionRatio(int input_dim, std::function<double(const Vector&)> fn,
                             std::string description)
    : input_dim_(input_dim), fn_(std::move(fn)), description_(std::move(description)) {}

void FunctionRatio::set_parameters(const Vector& w) {
  if (w.size() != 0) {
    throw std::invalid_argument("FunctionRatio has no parameters");
  }
}

std::unique_ptr<LogRatioModel> FunctionRatio::clone() const {
  return std::make_unique<FunctionRatio>(*this);
}

}  // namespace ctl
