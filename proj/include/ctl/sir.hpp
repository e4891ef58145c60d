#pragma once

#include "ctl/sbi.hpp"

#include <cstdint>

namespace ctl {

// Discrete-time binomial-chain SIR process. Per step of length
// T / steps: infections ~ Binomial(S, 1 - exp(-beta I dt / N)) and
// recoveries ~ Binomial(I, 1 - exp(-gamma dt)).
struct SirConfig {
  long population = 500;
  long initial_infected = 2;
  double horizon = 3.0;
  int steps = 200;

  void validate() const;
};

// Full integer trajectory, (steps + 1) rows of (S, I, R).
Matrix sir_trajectory(const SirConfig& config, double beta, double gamma,
                      std::uint64_t seed);

// Observations at the design times (nearest step): the infected and
// recovered fractions (I/N, R/N) per time, concatenated.
Vector sir_simulate(const SirConfig& config, double beta, double gamma,
                    const Vector& design_times, std::uint64_t seed);

// Simulator-interface adapter with theta = (beta, gamma) and a design
// of q measurement times.
class SirSimulator final : public Simulator {
 public:
  SirSimulator(SirConfig config, int design_times);

  int parameter_dim() const override { return 2; }
  int data_dim() const override { return 2 * design_times_; }
  int design_dim() const override { return design_times_; }
  Vector run(const Vector& theta, const Vector& design,
             std::uint64_t seed) const override;

  const SirConfig& config() const { return config_; }

 private:
  SirConfig config_;
  int design_times_;
};

}  // namespace ctl
