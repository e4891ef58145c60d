#include "ctl/random.hpp"

#include <cmath>
#include <stdexcept>

namespace ctl {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream_id) {
  std::uint64_t s = master ^ (0xa0761d6478bd642fULL * (stream_id + 1));
  splitmix64(s);
  return splitmix64(s);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) {
    word = splitmix64(s);
  }
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53-bit mantissa, offset by half a ulp so the result is in (0, 1).
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_below: bound must be positive");
  }
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) {
      return r % bound;
    }
  }
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

long Rng::binomial(long n, double p) {
  if (n < 0 || p < 0.0 || p > 1.0) {
    throw std::invalid_argument("binomial: need n >= 0 and p in [0, 1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) {
    return n - binomial(n, 1.0 - p);
  }
  if (double(n) * p < 10.0) {
    return binomial_inversion(n, p);
  }
  return binomial_btrs(n, p);
}

long Rng::binomial_inversion(long n, double p) {
  // CDF walk; expected O(n*p) iterations, only used when n*p is small.
  const double q = 1.0 - p;
  const double r = p / q;
  double f = std::exp(double(n) * std::log1p(-p));  // P(X = 0)
  double cdf = f;
  const double u = uniform();
  long k = 0;
  while (u > cdf && k < n) {
    ++k;
    f *= r * double(n - k + 1) / double(k);
    cdf += f;
  }
  return k;
}

namespace {
// Correction term in Stirling's series for log(k!), as tabulated in
// Hormann (1993) for the BTRS sampler.
double stirling_tail(double k) {
  static const double table[] = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834,
      0.02079067210376509, 0.01664469118982119, 0.01387612882307075,
      0.01189670994589177, 0.01041126526197209, 0.00925546218271273,
      0.00833056343336287};
  if (k < 10.0) {
    return table[long(k)];
  }
  const double kp = k + 1.0;
  return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * kp * kp)) / (kp * kp)) / kp;
}
}  // namespace

long Rng::binomial_btrs(long n, double p) {
  // Transformed rejection with squeeze (Hormann 1993); requires
  // p <= 0.5 and n*p >= 10, both guaranteed by the dispatcher.
  const double nd = double(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / q;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((nd + 1.0) * p);

  for (;;) {
    const double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    if (us >= 0.07 && v <= v_r) {
      return long(kd);
    }
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound =
        (m + 0.5) * std::log((m + 1.0) / (r * (nd - m + 1.0))) +
        (nd + 1.0) * std::log((nd - m + 1.0) / (nd - kd + 1.0)) +
        (kd + 0.5) * std::log(r * (nd - kd + 1.0) / (kd + 1.0)) +
        stirling_tail(m) - stirling_tail(kd);
    if (v <= bound) {
      return long(kd);
    }
  }
}

std::vector<Eigen::Index> Rng::permutation(Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        uniform_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace ctl
