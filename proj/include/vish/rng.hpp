#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace vish {

// SplitMix64 stream. Used everywhere randomness is needed so that results do
// not depend on the standard library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in (0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  // standard normal via Box-Muller, one cached spare
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925287 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  // unbiased integer in [0, n) by rejection
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Collapse a tuple of integers into one stream key. Deterministic and
// order-sensitive, so (d, degree, seed, retry) and permutations differ.
inline std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) {
    SplitMix64 s(h ^ p);
    h = s.next_u64();
  }
  return h;
}

}  // namespace vish
