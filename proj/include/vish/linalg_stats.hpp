#pragma once

#include <atomic>
#include <cstdint>

namespace vish::linalg_stats {

// Counts every dense matrix factorization performed by the library. The
// prediction and stochastic-ELBO paths must leave it untouched; tests assert
// this to pin the O(N M^2) cost structure.
inline std::atomic<std::uint64_t>& factorization_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

inline void count_factorization() { factorization_counter().fetch_add(1, std::memory_order_relaxed); }

inline std::uint64_t factorizations() { return factorization_counter().load(std::memory_order_relaxed); }

}  // namespace vish::linalg_stats
