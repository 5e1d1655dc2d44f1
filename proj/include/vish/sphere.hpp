#pragma once

#include <cstdint>

namespace vish {

// Surface area of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2).
double surface_area(int d);

// omega_d = Omega_{d-2} / Omega_{d-1}, the Funk-Hecke normalization constant.
double funk_hecke_constant(int d);

struct SphereGeometry {
  int ambient_dim;
  double surface_area;
  double funk_hecke_const;

  static SphereGeometry create(int d);
};

// Dimension of the space of degree-l spherical harmonics on S^{d-1}:
// N_l^d = (2l + d - 2) / (d - 2) * binom(l + d - 3, l). Throws range_error
// on int64 overflow.
std::int64_t num_harmonics(int d, int degree);

}  // namespace vish
