#include "ctl/sir.hpp"

#include "ctl/random.hpp"

#include <cmath>
#include <stdexcept>

namespace ctl {

void SirConfig::validate() const {
  if (initial_infected <= 0 || initial_infected >= population) {
    throw std::invalid_argument("SirConfig: need 0 < initial_infected < population");
  }
  if (!(horizon > 0.0) || steps < 1) {
    throw std::invalid_argument("SirConfig: need horizon > 0 and steps >= 1");
  }
}

Matrix sir_trajectory(const SirConfig& config, double beta, double gamma,
                      std::uint64_t seed) {
  config.validate();
  if (beta < 0.0 || gamma < 0.0) {
    throw std::invalid_argument("sir_trajectory: rates must be nonnegative");
  }
  const double dt = config.horizon / double(config.steps);
  const double n_pop = double(config.population);

  Rng rng(seed);
  long s = config.population - config.initial_infected;
  long i = config.initial_infected;
  long r = 0;

  Matrix traj(config.steps + 1, 3);
  traj.row(0) << double(s), double(i), double(r);
  const double p_recover = -std::expm1(-gamma * dt);
  for (int t = 1; t <= config.steps; ++t) {
    const double p_infect = -std::expm1(-beta * double(i) * dt / n_pop);
    const long infections = rng.binomial(s, p_infect);
    const long recoveries = rng.binomial(i, p_recover);
    s -= infections;
    i += infections - recoveries;
    r += recoveries;
    traj.row(t) << double(s), double(i), double(r);
  }
  return traj;
}

Vector sir_simulate(const SirConfig& config, double beta, double gamma,
                    const Vector& design_times, std::uint64_t seed) {
  config.validate();
  if (design_times.size() == 0) {
    throw std::invalid_argument("sir_simulate: need at least one design time");
  }
  for (Eigen::Index j = 0; j < design_times.size(); ++j) {
    if (design_times[j] < 0.0 || design_times[j] > config.horizon) {
      throw std::invalid_argument("sir_simulate: design time outside [0, horizon]");
    }
  }
  const Matrix traj = sir_trajectory(config, beta, gamma, seed);
  const double dt = config.horizon / double(config.steps);
  const double n_pop = double(config.population);

  Vector obs(2 * design_times.size());
  for (Eigen::Index j = 0; j < design_times.size(); ++j) {
    auto step = long(std::llround(design_times[j] / dt));
    step = std::min<long>(std::max<long>(step, 0), config.steps);
    obs[2 * j] = traj(step, 1) / n_pop;      // infected fraction
    obs[2 * j + 1] = traj(step, 2) / n_pop;  // recovered fraction
  }
  return obs;
}

SirSimulator::SirSimulator(SirConfig config, int design_times)
    : config_(config), design_times_(design_times) {
  config_.validate();
  if (design_times < 1) {
    throw std::invalid_argument("SirSimulator: need at least one design time");
  }
}

Vector SirSimulator::run(const Vector& theta, const Vector& design,
                         std::uint64_t seed) const {
  if (theta.size() != 2) {
    throw std::invalid_argument("SirSimulator: theta must be (beta, gamma)");
  }
  if (design.size() != design_times_) {
    throw std::invalid_argument("SirSimulator: design size mismatch");
  }
  return sir_simulate(config_, theta[0], theta[1], design, seed);
}

}  // namespace ctl
