#pragma once

#include "ctl/common.hpp"

#include <cstdint>
#include <vector>

namespace ctl {

// splitmix64 step; used for seeding and for deriving independent
// sub-seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Stable sub-seed for stream `stream_id` of a master seed. Replicates,
// parallel simulations and per-draw noise streams are all keyed this way.
std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream_id);

// xoshiro256** with an explicit 64-bit seed. The integer stream is
// platform-independent; floating-point transforms (normal, binomial)
// go through libm and are only guaranteed identical on one machine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform();

  // Uniform integer in [0, bound) by rejection; unbiased.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();

  // Binomial(n, p). Inversion for small n*p, BTRS rejection otherwise.
  long binomial(long n, double p);

  // In-place Fisher-Yates shuffle of 0..n-1 index vector.
  std::vector<Eigen::Index> permutation(Eigen::Index n);

 private:
  long binomial_inversion(long n, double p);
  long binomial_btrs(long n, double p);

  std::uint64_t state_[4];
};

}  // namespace ctl
