#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace vish {

// Orthonormal basis of the degree-l spherical-harmonic space on S^{d-1},
// built from a fundamental point system: the zonal functions
// z_i(x) = ((l+a)/a) C_l^(a)(v_i . x) span the level, and the inverse Gram
// factor orthonormalizes them,
//   phi_k(x) = sum_i [L^-1]_{k,i} z_i(x),  M = L L^T,  M_ij = z_i(v_j).
// Orthonormality is with respect to the surface-area-normalized L2 inner
// product, matching the addition theorem sum_k phi_k(x) phi_k(x') = z(x.x').
struct HarmonicLevel {
  int ambient_dim = 0;
  int degree = 0;
  Eigen::Index count = 0;
  Eigen::MatrixXd fundamental_points;  // count x d, unit rows
  Eigen::MatrixXd gram_factor;         // count x count lower triangular
  std::uint64_t rng_seed = 0;
  int retry_index = 0;
  double condition = 1.0;
};

// Samples fundamental systems from a counter-based stream keyed by
// (d, degree, seed, retry) until the Gram condition number is acceptable.
// Throws ConstructionError if no system below 1e8 is found in 50 tries.
HarmonicLevel build_level(int d, int degree, std::uint64_t seed);

// Deterministic rebuild from known points (deserialization, rotation tests).
HarmonicLevel level_from_points(int d, int degree, Eigen::MatrixXd points, std::uint64_t seed,
                                int retry_index = 0);

// Row n, column k holds phi_{l,k}(points.row(n)). Rows must be unit within 1e-8.
Eigen::MatrixXd eval_level(const HarmonicLevel& level, const Eigen::Ref<const Eigen::MatrixXd>& points);

// Gradients at a single unit point: row k holds the euclidean gradient of
// phi_{l,k} extended off the sphere by the zonal form (used for chain rules).
Eigen::MatrixXd eval_level_grad(const HarmonicLevel& level, const Eigen::Ref<const Eigen::RowVectorXd>& point);

struct HarmonicBasis {
  int ambient_dim = 0;
  int max_degree = 0;
  std::vector<HarmonicLevel> levels;  // strictly increasing degrees
  Eigen::Index total_count = 0;
};

// All levels 0..max_degree.
HarmonicBasis build_basis(int d, int max_degree, std::uint64_t seed);

// Selected degrees only (strictly increasing). Used when a kernel's spectrum
// vanishes on some levels.
HarmonicBasis build_basis(int d, const std::vector<int>& degrees, std::uint64_t seed);

namespace detail {
Eigen::MatrixXd sample_unit_vectors(int d, Eigen::Index n, std::uint64_t stream_key);
}

}  // namespace vish
