#include "vish/sphere.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vish {

double surface_area(int d) {
  if (d < 1) throw std::invalid_argument("surface_area: d must be >= 1");
  double log_area = std::log(2.0) + 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d);
  return std::exp(log_area);
}

double funk_hecke_constant(int d) {
  if (d < 3) throw std::invalid_argument("funk_hecke_constant: d must be >= 3");
  return surface_area(d - 1) / surface_area(d);
}

SphereGeometry SphereGeometry::create(int d) {
  if (d < 3) throw std::invalid_argument("SphereGeometry: d must be >= 3");
  return SphereGeometry{d, vish::surface_area(d), vish::funk_hecke_constant(d)};
}

std::int64_t num_harmonics(int d, int degree) {
  if (d < 3) throw std::invalid_argument("num_harmonics: d must be >= 3");
  if (degree < 0) throw std::invalid_argument("num_harmonics: degree must be >= 0");
  if (degree == 0) return 1;

  // binom(l + d - 3, d - 3) built incrementally; stays integral at each step
  unsigned __int128 binom = 1;
  const std::int64_t k = d - 3;
  for (std::int64_t i = 1; i <= k; ++i) {
    binom = binom * static_cast<unsigned __int128>(degree + i) / static_cast<unsigned __int128>(i);
    if (binom > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max()))
      throw std::range_error("num_harmonics: overflow at d=" + std::to_string(d) + " degree=" + std::to_string(degree));
  }
  unsigned __int128 total = binom * static_cast<unsigned __int128>(2 * static_cast<std::int64_t>(degree) + d - 2);
  if (total % static_cast<unsigned __int128>(d - 2) != 0)
    throw std::logic_error("num_harmonics: internal divisibility failure");
  total /= static_cast<unsigned __int128>(d - 2);
  if (total > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max()))
    throw std::range_error("num_harmonics: overflow at d=" + std::to_string(d) + " degree=" + std::to_string(degree));
  return static_cast<std::int64_t>(total);
}

}  // namespace vish
