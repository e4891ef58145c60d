#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace ctl {

// Runs body(i) for i in [0, n) over a fixed chunked partition. Results
// must be written to disjoint, preallocated slots so the outcome is
// identical for any thread count.
template <typename Body>
void parallel_for(Eigen::Index n, Body&& body, Eigen::Index min_grain = 256) {
  if (n <= 0) return;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const Eigen::Index max_chunks = (n + min_grain - 1) / min_grain;
  const Eigen::Index n_threads = std::min<Eigen::Index>(hw, max_chunks);
  if (n_threads <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  const Eigen::Index chunk = (n + n_threads - 1) / n_threads;
  for (Eigen::Index t = 0; t < n_threads; ++t) {
    const Eigen::Index lo = t * chunk;
    const Eigen::Index hi = std::min(n, lo + chunk);
    workers.emplace_back([&, t, lo, hi] {
      try {
        for (Eigen::Index i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ctl
