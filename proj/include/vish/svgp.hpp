#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "vish/harmonics.hpp"
#include "vish/kernels.hpp"
#include "vish/likelihood.hpp"
#include "vish/sphere_map.hpp"

namespace vish {

// Spherical-harmonic inducing features: the harmonic levels kept by the
// kernel (levels with vanishing Mercer coefficient are excluded) plus the
// per-feature prior variances a_m. Kuu = diag(1 / a_m) is never materialized.
struct InducingBasis {
  HarmonicBasis harmonic_basis;
  ZonalSpectrum spectrum;
  Eigen::VectorXd a_hat;  // per feature, ordered by level then within-level index

  Eigen::Index num_features() const { return a_hat.size(); }
};

InducingBasis build_inducing_basis(const KernelSpec& kernel, int max_degree, std::uint64_t seed,
                                   bool normalize_spectrum);

// Rebuild from stored parts (model files, tests). Expands per-level
// coefficients to the per-feature vector; degrees absent from the harmonic
// basis are skipped.
InducingBasis inducing_basis_from_parts(HarmonicBasis basis, ZonalSpectrum spectrum);

// [1 / a_m]; degenerate coefficients (<= 1e-300) raise a NumericalError
// naming the level.
Eigen::VectorXd kuu_diag(const InducingBasis& basis);

struct VariationalState {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd cov_factor;  // lower triangular, positive diagonal; S = L L^T

  void validate() const;
};

// m = 0, S = Kuu: the KL-zero prior start.
VariationalState prior_state(const InducingBasis& basis);

struct VishModel {
  KernelSpec kernel;
  SphereMapping mapping;
  InducingBasis basis;
  VariationalState variational;
  Likelihood likelihood;

  Eigen::Index num_features() const { return basis.num_features(); }
  void validate() const;
};

VishModel make_model(const KernelSpec& kernel, const SphereMapping& mapping, const Likelihood& likelihood,
                     int max_degree, std::uint64_t seed, bool normalize_spectrum);

// Phi_{n,m} = feature_scale(r_n) phi_m(u_n), the Cov(f(x_n), u_m) features.
Eigen::MatrixXd features(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

// q(f) marginals at O(N M^2); no M x M factorization or inverse.
Prediction predict_f(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

// Full q(f) covariance over the batch (N x N).
Eigen::MatrixXd predict_f_full_cov(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

// KL(q(u) || p(u)) with diagonal prior covariance.
double kl_qu_pu(const VishModel& model);

// (total_N / batch) sum_n E_q[log p(y_n | f_n)] - KL. Throws NumericalError
// (with a parameter snapshot in the message) if the result is not finite.
double elbo_stochastic(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index total_N);

// ELBO plus gradients with respect to the variational state, the per-feature
// prior variances (chained into kernel hyperparameters by the caller), the
// log mapping parameters, and the log noise variance.
struct ElboGradients {
  double value = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::MatrixXd d_cov_factor;   // lower-triangular gradient wrt L itself
  Eigen::VectorXd d_a_hat;        // per feature
  Eigen::VectorXd d_mapping_log;  // [log w_1 .. log w_din, log b]
  double d_log_noise = 0.0;       // gaussian likelihoods
};

ElboGradients elbo_with_gradients(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index total_N);

// Titsias-optimal q(u) for Gaussian noise, plus the collapsed evidence bound.
// The only place (besides construction) that factorizes an M x M matrix.
struct CollapsedFit {
  VariationalState state;
  double evidence_bound = 0.0;
};

CollapsedFit collapsed_gaussian_fit(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& y);

namespace detail {

// Forward pass shared by prediction and the ELBO paths.
struct FeatureForward {
  Eigen::MatrixXd U;                    // batch x d
  Eigen::VectorXd r;                    // radii
  Eigen::VectorXd scale;                // feature_scale(r_n)
  Eigen::MatrixXd phi;                  // batch x M, harmonic values without scale
  Eigen::MatrixXd features;             // batch x M, scale * phi
  std::vector<Eigen::MatrixXd> level_dots;  // per level: count x batch inner products
};

FeatureForward feature_forward(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                               bool keep_level_dots);

}  // namespace detail

}  // namespace vish
