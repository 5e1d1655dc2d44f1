#include "vish/harmonics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "vish/errors.hpp"
#include "vish/gegenbauer.hpp"
#include "vish/linalg_stats.hpp"
#include "vish/rng.hpp"
#include "vish/sphere.hpp"

namespace vish {

namespace {

constexpr double kCondTarget = 1e7;   // retry until below this
constexpr double kCondLimit = 1e8;    // hard acceptance bound
constexpr int kMaxRetries = 50;

void check_dim_degree(int d, int degree) {
  if (d < 3 || d > 10)
    throw DimensionError("harmonics: ambient dimension " + std::to_string(d) + " outside supported range [3, 10]");
  if (degree < 0) throw std::invalid_argument("harmonics: degree must be non-negative");
}

// Gram of the zonal spanning set, M_ij = ((l+a)/a) C_l(v_i . v_j).
Eigen::MatrixXd zonal_gram(const Eigen::MatrixXd& points, int degree, double alpha) {
  const Eigen::Index n = points.rows();
  GegenbauerEvaluator geg(alpha, degree);
  const double scale = (degree + alpha) / alpha;
  Eigen::MatrixXd dots = points * points.transpose();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      double t = std::min(1.0, std::max(-1.0, dots(i, j)));
      double v = scale * geg(t);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

// Extreme-eigenvalue ratio. Exact for small systems, power/inverse-power
// iteration with the Cholesky factor otherwise.
double estimate_condition(const Eigen::MatrixXd& gram, const Eigen::LLT<Eigen::MatrixXd>& llt,
                          std::uint64_t stream_key) {
  const Eigen::Index n = gram.rows();
  if (n == 1) return 1.0;
  if (n <= 256) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    double lo = es.eigenvalues()(0);
    double hi = es.eigenvalues()(n - 1);
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }
  SplitMix64 rng(stream_key);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.gaussian();
  v.normalize();
  double lambda_max = 0.0;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd w = gram * v;
    lambda_max = v.dot(w);
    double norm = w.norm();
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    v = w / norm;
  }
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = rng.gaussian();
  u.normalize();
  double inv_lambda_min = 0.0;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd w = llt.solve(u);
    inv_lambda_min = u.dot(w);
    double norm = w.norm();
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    u = w / norm;
  }
  if (!(inv_lambda_min > 0.0) || !(lambda_max > 0.0)) return std::numeric_limits<double>::infinity();
  return lambda_max * inv_lambda_min;
}

}  // namespace

namespace detail {

Eigen::MatrixXd sample_unit_vectors(int d, Eigen::Index n, std::uint64_t stream_key) {
  SplitMix64 rng(stream_key);
  Eigen::MatrixXd points(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) points(i, j) = rng.gaussian();
      norm2 = points.row(i).squaredNorm();
    } while (norm2 < 1e-24);
    points.row(i) /= std::sqrt(norm2);
  }
  return points;
}

}  // namespace detail

HarmonicLevel level_from_points(int d, int degree, Eigen::MatrixXd points, std::uint64_t seed,
                                int retry_index) {
  check_dim_degree(d, degree);
  const Eigen::Index n = num_harmonics(d, degree);
  if (points.rows() != n || points.cols() != d)
    throw std::invalid_argument("level_from_points: expected " + std::to_string(n) + " x " + std::to_string(d) +
                                " points for d=" + std::to_string(d) + " degree=" + std::to_string(degree));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(points.row(i).norm() - 1.0) > 1e-8)
      throw std::invalid_argument("level_from_points: row " + std::to_string(i) + " is not unit norm");
  }
  const double alpha = 0.5 * (d - 2);
  Eigen::MatrixXd gram = zonal_gram(points, degree, alpha);
  linalg_stats::count_factorization();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw ConstructionError("level_from_points: Gram factorization failed at d=" + std::to_string(d) +
                            " degree=" + std::to_string(degree));
  HarmonicLevel level;
  level.ambient_dim = d;
  level.degree = degree;
  level.count = n;
  level.fundamental_points = std::move(points);
  level.gram_factor = llt.matrixL();
  level.rng_seed = seed;
  level.retry_index = retry_index;
  level.condition = estimate_condition(gram, llt, mix_key({0xC0ul, static_cast<std::uint64_t>(d),
                                                           static_cast<std::uint64_t>(degree), seed}));
  return level;
}

HarmonicLevel build_level(int d, int degree, std::uint64_t seed) {
  check_dim_degree(d, degree);
  const Eigen::Index n = num_harmonics(d, degree);
  const double alpha = 0.5 * (d - 2);

  double best_cond = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_points;
  Eigen::MatrixXd best_factor;
  int best_retry = -1;

  for (int retry = 0; retry < kMaxRetries; ++retry) {
    std::uint64_t key = mix_key({static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(degree), seed,
                                 static_cast<std::uint64_t>(retry)});
    Eigen::MatrixXd points = detail::sample_unit_vectors(d, n, key);
    Eigen::MatrixXd gram = zonal_gram(points, degree, alpha);
    linalg_stats::count_factorization();
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) continue;
    double cond = estimate_condition(gram, llt, key ^ 0x5bd1e995u);
    if (cond < best_cond) {
      best_cond = cond;
      best_points = std::move(points);
      best_factor = llt.matrixL();
      best_retry = retry;
    }
    if (best_cond < kCondTarget) break;
  }

  if (!(best_cond < kCondLimit))
    throw ConstructionError("build_level: no well-conditioned fundamental system for d=" + std::to_string(d) +
                            " degree=" + std::to_string(degree) + "; best condition " + std::to_string(best_cond));

  HarmonicLevel level;
  level.ambient_dim = d;
  level.degree = degree;
  level.count = n;
  level.fundamental_points = std::move(best_points);
  level.gram_factor = std::move(best_factor);
  level.rng_seed = seed;
  level.retry_index = best_retry;
  level.condition = best_cond;
  return level;
}

Eigen::MatrixXd eval_level(const HarmonicLevel& level, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const Eigen::Index batch = points.rows();
  if (points.cols() != level.ambient_dim)
    throw std::invalid_argument("eval_level: points have dimension " + std::to_string(points.cols()) +
                                ", level expects " + std::to_string(level.ambient_dim));
  for (Eigen::Index i = 0; i < batch; ++i) {
    double norm = points.row(i).norm();
    if (std::abs(norm - 1.0) > 1e-8)
      throw std::invalid_argument("eval_level: row " + std::to_string(i) + " has norm " + std::to_string(norm) +
                                  ", expected unit");
  }
  const double alpha = 0.5 * (level.ambient_dim - 2);
  const double scale = (level.degree + alpha) / alpha;
  GegenbauerEvaluator geg(alpha, level.degree);

  // Z = scale * C_l(V X^T), then solve L Phi = Z.
  Eigen::MatrixXd z = level.fundamental_points * points.transpose();
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      z(i, j) = scale * geg(std::min(1.0, std::max(-1.0, z(i, j))));
  level.gram_factor.triangularView<Eigen::Lower>().solveInPlace(z);
  return z.transpose();
}

Eigen::MatrixXd eval_level_grad(const HarmonicLevel& level, const Eigen::Ref<const Eigen::RowVectorXd>& point) {
  if (point.cols() != level.ambient_dim)
    throw std::invalid_argument("eval_level_grad: point dimension mismatch");
  const double alpha = 0.5 * (level.ambient_dim - 2);
  const double scale = (level.degree + alpha) / alpha;
  Eigen::VectorXd t = level.fundamental_points * point.transpose();
  Eigen::MatrixXd grads(level.count, level.ambient_dim);
  for (Eigen::Index i = 0; i < level.count; ++i) {
    double ti = std::min(1.0, std::max(-1.0, t(i)));
    grads.row(i) = scale * gegenbauer_derivative(alpha, level.degree, ti) * level.fundamental_points.row(i);
  }
  level.gram_factor.triangularView<Eigen::Lower>().solveInPlace(grads);
  return grads;
}

HarmonicBasis build_basis(int d, int max_degree, std::uint64_t seed) {
  std::vector<int> degrees;
  degrees.reserve(max_degree + 1);
  for (int l = 0; l <= max_degree; ++l) degrees.push_back(l);
  return build_basis(d, degrees, seed);
}

HarmonicBasis build_basis(int d, const std::vector<int>& degrees, std::uint64_t seed) {
  if (degrees.empty()) throw std::invalid_argument("build_basis: need at least one degree");
  for (std::size_t i = 1; i < degrees.size(); ++i)
    if (degrees[i] <= degrees[i - 1]) throw std::invalid_argument("build_basis: degrees must be strictly increasing");
  HarmonicBasis basis;
  basis.ambient_dim = d;
  basis.max_degree = degrees.back();
  basis.levels.reserve(degrees.size());
  basis.total_count = 0;
  for (int l : degrees) {
    basis.levels.push_back(build_level(d, l, seed));
    basis.total_count += basis.levels.back().count;
  }
  return basis;
}

}  // namespace vish
