#include "ctl/nce.hpp"

#include "ctl/csv.hpp"
#include "ctl/random.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace ctl {

Vector EnergyModel::energy_batch(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i] = energy(X.row(i).transpose());
  }
  return out;
}

Vector EnergyModel::weighted_energy_gradient_sum(const Matrix& X,
                                                 const Vector& coeffs) const {
  if (X.rows() != coeffs.size()) {
    throw std::invalid_argument("weighted_energy_gradient_sum: size mismatch");
  }
  Vector acc = Vector::Zero(parameter_count());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc.noalias() += coeffs[i] * energy_parameter_gradient(X.row(i).transpose());
  }
  return acc;
}

std::unique_ptr<SampleableEnergyModel> SampleableEnergyModel::clone_sampleable() const {
  auto cloned = clone();
  auto* p = dynamic_cast<SampleableEnergyModel*>(cloned.get());
  if (p == nullptr) {
    throw std::logic_error("clone() of a SampleableEnergyModel lost sampleability");
  }
  cloned.release();
  return std::unique_ptr<SampleableEnergyModel>(p);
}

GaussianScaleEnergy::GaussianScaleEnergy(int dim, double sigma) : dim_(dim) {
  if (dim < 1) {
    throw std::invalid_argument("GaussianScaleEnergy: dim must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("GaussianScaleEnergy: sigma must be positive");
  }
  theta_ = Vector::Constant(1, sigma);
}

void GaussianScaleEnergy::set_theta(const Vector& theta) {
  if (theta.size() != 1) {
    throw std::invalid_argument("GaussianScaleEnergy: theta must be 1-D");
  }
  theta_ = theta;
}

double GaussianScaleEnergy::energy(const Vector& x) const {
  const double s = sigma();
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  return x.squaredNorm() / (2.0 * s * s);
}

Vector GaussianScaleEnergy::energy_parameter_gradient(const Vector& x) const {
  const double s = sigma();
  return Vector::Constant(1, -x.squaredNorm() / (s * s * s));
}

Vector GaussianScaleEnergy::energy_batch(const Matrix& X) const {
  const double s = sigma();
  if (!(s > 0.0)) {
    return Vector::Constant(X.rows(), std::numeric_limits<double>::infinity());
  }
  return X.rowwise().squaredNorm() / (2.0 * s * s);
}

Vector GaussianScaleEnergy::weighted_energy_gradient_sum(const Matrix& X,
                                                         const Vector& coeffs) const {
  const double s = sigma();
  const double acc = coeffs.dot(X.rowwise().squaredNorm());
  return Vector::Constant(1, -acc / (s * s * s));
}

double GaussianScaleEnergy::log_partition() const {
  const double s = sigma();
  if (!(s > 0.0)) {
    throw std::domain_error("GaussianScaleEnergy: log_partition needs sigma > 0");
  }
  return 0.5 * double(dim_) * std::log(2.0 * kPi * s * s);
}

Vector GaussianScaleEnergy::log_partition_gradient() const {
  return Vector::Constant(1, double(dim_) / sigma());
}

Matrix GaussianScaleEnergy::sample(Eigen::Index count, std::uint64_t seed) const {
  const double s = sigma();
  if (!(s > 0.0)) {
    throw std::domain_error("GaussianScaleEnergy: sampling needs sigma > 0");
  }
  Rng rng(seed);
  Matrix out(count, dim_);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int j = 0; j < dim_; ++j) {
      out(i, j) = s * rng.normal();
    }
  }
  return out;
}

std::unique_ptr<EnergyModel> GaussianScaleEnergy::clone() const {
  return std::make_unique<GaussianScaleEnergy>(*this);
}

std::string GaussianScaleEnergy::description() const {
  return "gaussian scale family, d = " + std::to_string(dim_);
}

ScaledEnergyModel::ScaledEnergyModel(std::unique_ptr<EnergyModel> inner, double log_scale)
    : inner_(std::move(inner)), log_scale_(log_scale) {}

std::unique_ptr<EnergyModel> ScaledEnergyModel::clone() const {
  return std::make_unique<ScaledEnergyModel>(inner_->clone(), log_scale_);
}

std::string ScaledEnergyModel::description() const {
  return inner_->description() + " scaled by exp(" + format_double(log_scale_) + ")";
}

EnergyModelReference::EnergyModelReference(const SampleableEnergyModel& model)
    : model_(model.clone_sampleable()) {}

Vector EnergyModelReference::log_density_batch(const Matrix& X) const {
  return (-model_->energy_batch(X)).array() - model_->log_partition();
}

std::string EnergyModelReference::description() const {
  return "normalised " + model_->description();
}

NceRatioModel::NceRatioModel(std::unique_ptr<EnergyModel> energy,
                             std::shared_ptr<const ReferenceDistribution> reference,
                             double c)
    : energy_(std::move(energy)), reference_(std::move(reference)) {
  if (energy_->dim() != reference_->dim()) {
    throw std::invalid_argument("NceRatioModel: model/reference dimensionality mismatch");
  }
  params_.resize(energy_->parameter_count() + 1);
  params_.head(energy_->parameter_count()) = energy_->theta();
  params_[params_.size() - 1] = c;
}

void NceRatioModel::set_parameters(const Vector& w) {
  if (w.size() != params_.size()) {
    throw std::invalid_argument("NceRatioModel: parameter size mismatch");
  }
  params_ = w;
  energy_->set_theta(w.head(w.size() - 1));
}

double NceRatioModel::evaluate(const Vector& x) const {
  return -energy_->energy(x) - reference_->log_density(x) + c();
}

Vector NceRatioModel::parameter_gradient(const Vector& x) const {
  Vector g(params_.size());
  g.head(params_.size() - 1) = -energy_->energy_parameter_gradient(x);
  g[g.size() - 1] = 1.0;
  return g;
}

Vector NceRatioModel::evaluate_batch(const Matrix& X) const {
  return (-energy_->energy_batch(X) - reference_->log_density_batch(X)).array() + c();
}

Vector NceRatioModel::weighted_gradient_sum(const Matrix& X, const Vector& coeffs) const {
  Vector g(params_.size());
  g.head(params_.size() - 1) = -energy_->weighted_energy_gradient_sum(X, coeffs);
  g[g.size() - 1] = coeffs.sum();
  return g;
}

std::unique_ptr<LogRatioModel> NceRatioModel::clone() const {
  return std::unique_ptr<LogRatioModel>(
      new NceRatioModel(energy_->clone(), reference_, c()));
}

std::string NceRatioModel::description() const {
  return "nce ratio over (" + energy_->description() + ", " +
         reference_->description() + ")";
}

NceRatioModel nce_ratio_model(const EnergyModel& model,
                              std::shared_ptr<const ReferenceDistribution> reference,
                              double c) {
  return {model.clone(), std::move(reference), c};
}

std::string NceEstimate::to_json() const {
  nlohmann::json j;
  j["theta_hat"] = std::vector<double>(theta_hat.data(), theta_hat.data() + theta_hat.size());
  j["c_hat"] = c_hat;
  j["final_loss"] = final_loss;
  j["nu"] = nu;
  j["reference_seed"] = reference_seed;
  j["converged"] = converged;
  nlohmann::json traj = nlohmann::json::array();
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    traj.push_back({{"iteration", i},
                    {"loss", trajectory[i].value},
                    {"gradient_norm", trajectory[i].gradient_norm}});
  }
  j["trajectory"] = std::move(traj);
  return j.dump(2);
}

namespace {

Objective logistic_objective(LogRatioModel& model, const LabeledTwoSample& sample) {
  return [&model, &sample](const Vector& w, Vector& grad) {
    model.set_parameters(w);
    const LossReport r = logistic_loss_with_gradient(model, sample);
    grad = r.gradient;
    return r.loss_value;
  };
}

}  // namespace

NceEstimate nce_fit(const EnergyModel& model, const Matrix& data,
                    std::shared_ptr<const ReferenceDistribution> reference,
                    const NceFitConfig& config, std::uint64_t seed) {
  if (data.rows() == 0) {
    throw std::invalid_argument("nce_fit: empty data");
  }
  if (!(config.nu > 0.0)) {
    throw std::invalid_argument("nce_fit: nu must be positive");
  }
  const auto m = Eigen::Index(std::llround(config.nu * double(data.rows())));
  if (m < 1) {
    throw std::invalid_argument("nce_fit: nu too small for this data size");
  }
  const std::uint64_t ref_seed = sub_seed(seed, 0);
  const LabeledTwoSample sample =
      make_two_sample(data, reference->sample(m, ref_seed));

  NceRatioModel ratio(model.clone(), reference, config.initial_c);
  const OptimResult opt =
      minimise(logistic_objective(ratio, sample), ratio.parameters(), config.optimizer);
  if (opt.diverged) {
    throw std::runtime_error("nce_fit: optimizer diverged (" + opt.stop_reason + ")");
  }

  NceEstimate est;
  est.theta_hat = opt.argmin.head(opt.argmin.size() - 1);
  est.c_hat = opt.argmin[opt.argmin.size() - 1];
  est.final_loss = opt.final_value;
  est.trajectory = opt.trace;
  est.reference_seed = ref_seed;
  est.nu = sample.nu;
  est.converged = opt.converged;
  return est;
}

std::vector<NceEstimate> iterative_nce(
    const SampleableEnergyModel& model, const Matrix& data, int rounds,
    int steps_per_round, const NceFitConfig& config,
    std::shared_ptr<const ReferenceDistribution> initial_reference,
    std::uint64_t seed) {
  if (rounds < 1 || steps_per_round < 1) {
    throw std::invalid_argument("iterative_nce: rounds and steps_per_round must be >= 1");
  }
  auto current = model.clone_sampleable();

  std::vector<NceEstimate> estimates;
  estimates.reserve(std::size_t(rounds));
  NceFitConfig round_config = config;
  round_config.optimizer.max_iterations = steps_per_round;

  for (int round = 0; round < rounds; ++round) {
    std::shared_ptr<const ReferenceDistribution> reference;
    if (round == 0) {
      reference = std::move(initial_reference);
      if (!reference) {
        throw std::invalid_argument("iterative_nce: round 0 needs an initial reference");
      }
    } else {
      reference = std::make_shared<EnergyModelReference>(*current);
      // The previous fit is normalised exactly, so start c at -log Z.
      round_config.initial_c = -current->log_partition();
    }
    NceEstimate est =
        nce_fit(*current, data, reference, round_config, sub_seed(seed, std::uint64_t(round)));
    current->set_theta(est.theta_hat);
    estimates.push_back(std::move(est));
  }
  return estimates;
}

MleEquivalenceReport mle_gradient_equivalence_check(
    const SampleableEnergyModel& model, const Vector& theta_t, Eigen::Index n,
    Eigen::Index m, std::uint64_t seed, std::optional<double> c_override) {
  auto snapshot = model.clone_sampleable();
  snapshot->set_theta(theta_t);

  const double log_z = snapshot->log_partition();
  const double c = c_override.value_or(-log_z);

  MleEquivalenceReport report;
  report.b_t = c + log_z;
  report.b_zero = std::abs(report.b_t) < 1e-9;
  report.nu = double(m) / double(n);
  report.scale_factor = report.nu / (1.0 + report.nu);

  const Matrix data = snapshot->sample(n, sub_seed(seed, 0));
  const Matrix ref_bank = snapshot->sample(m, sub_seed(seed, 1));
  const Matrix fresh_bank = snapshot->sample(m, sub_seed(seed, 2));

  // NCE gradient with the model itself as reference distribution.
  auto reference = std::make_shared<EnergyModelReference>(*snapshot);
  NceRatioModel ratio(snapshot->clone(), reference, c);
  const LabeledTwoSample sample = make_two_sample(data, ref_bank);
  const Vector full_grad = logistic_loss_gradient(ratio, sample);
  report.nce_gradient = full_grad.head(full_grad.size() - 1);

  // grad log phi = -grad E. Per-point statistics for the MC terms.
  const auto grad_log_phi_mean = [&](const Matrix& X, Vector* se) {
    const Eigen::Index count = X.rows();
    Vector mean = -snapshot->weighted_energy_gradient_sum(
                      X, Vector::Constant(count, 1.0)) /
                  double(count);
    if (se != nullptr) {
      // second moment per coordinate, via per-point gradients
      Vector sq = Vector::Zero(mean.size());
      for (Eigen::Index i = 0; i < count; ++i) {
        const Vector g = -snapshot->energy_parameter_gradient(X.row(i).transpose());
        sq.array() += (g - mean).array().square();
      }
      *se = (sq / double(count - 1) / double(count)).cwiseSqrt();
    }
    return mean;
  };

  Vector se_ref, se_fresh;
  const Vector data_mean = grad_log_phi_mean(data, nullptr);
  const Vector ref_mean = grad_log_phi_mean(ref_bank, &se_ref);
  const Vector fresh_mean = grad_log_phi_mean(fresh_bank, &se_fresh);

  report.partition_gradient_mc = fresh_mean;
  report.partition_gradient_exact = snapshot->log_partition_gradient();
  report.mle_gradient_mc = -(data_mean - fresh_mean);
  report.mle_gradient_exact = -(data_mean - report.partition_gradient_exact);

  report.difference = report.nce_gradient - report.scale_factor * report.mle_gradient_mc;
  report.combined_se =
      report.scale_factor *
      (se_ref.array().square() + se_fresh.array().square()).sqrt().matrix();

  if (report.b_zero) {
    report.assertion_checked = true;
    report.within_3se =
        (report.difference.cwiseAbs().array() <= 3.0 * report.combined_se.array())
            .all();
  }
  return report;
}

LargeNuReport large_nu_gradient_check(const EnergyModel& model, const Matrix& data,
                                      const ReferenceDistribution& reference,
                                      const std::vector<double>& nu_list,
                                      std::uint64_t seed) {
  if (nu_list.empty()) {
    throw std::invalid_argument("large_nu_gradient_check: empty nu list");
  }
  const Eigen::Index n = data.rows();
  double nu_max = 0.0;
  for (double nu : nu_list) {
    if (!(nu > 0.0)) {
      throw std::invalid_argument("large_nu_gradient_check: nu must be positive");
    }
    nu_max = std::max(nu_max, nu);
  }
  const auto bank_size = Eigen::Index(std::llround(nu_max * double(n)));
  const Matrix bank = reference.sample(bank_size, sub_seed(seed, 0));

  // h = log phi - log q with c = 0.
  auto snapshot = model.clone();
  const Vector h_bank =
      (-snapshot->energy_batch(bank) - reference.log_density_batch(bank)).matrix();
  const Vector is_weights = h_bank.array().exp().matrix();

  LargeNuReport report;
  const double wsum = is_weights.sum();
  report.effective_sample_size = wsum * wsum / is_weights.squaredNorm();
  report.weights_degenerate = report.effective_sample_size < 10.0;

  // (1/n) sum grad log phi(x_i) = -(1/n) sum grad E(x_i)
  const Vector data_term =
      -snapshot->weighted_energy_gradient_sum(data, Vector::Ones(n)) / double(n);
  // (1/M) sum e^{h} grad log phi(y) = -(1/M) sum e^{h} grad E(y)
  const Vector is_term =
      -snapshot->weighted_energy_gradient_sum(bank, is_weights) / double(bank_size);
  report.is_target = -data_term + is_term;

  const Vector h_data =
      (-snapshot->energy_batch(data) - reference.log_density_batch(data)).matrix();

  for (double nu : nu_list) {
    const auto m = Eigen::Index(std::llround(nu * double(n)));
    const Matrix prefix = bank.topRows(m);
    const LabeledTwoSample sample = make_two_sample(data, prefix);

    const double log_nu = std::log(sample.nu);
    const Vector h_ref = h_bank.head(m);
    const Vector data_w = -sigmoid_vec((log_nu - h_data.array()).matrix());
    const Vector ref_w =
        sample.nu * sigmoid_vec((h_ref.array() - log_nu).matrix());

    // theta block of the loss gradient (no c coordinate here).
    Vector grad = -snapshot->weighted_energy_gradient_sum(data, data_w) / double(n);
    grad.noalias() +=
        -snapshot->weighted_energy_gradient_sum(prefix, ref_w) / double(m);

    LargeNuRow row;
    row.nu = nu;
    row.gradient_deviation = (grad - report.is_target).cwiseAbs().maxCoeff();
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ctl
