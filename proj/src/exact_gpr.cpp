#include "vish/exact_gpr.hpp"

#include <stdexcept>
#include <string>

#include "vish/errors.hpp"
#include "vish/linalg_stats.hpp"

namespace vish {

namespace {

VishModel oracle_model(const InducingBasis& basis, const SphereMapping& mapping) {
  VishModel model;
  model.kernel = basis.spectrum.kernel;
  model.mapping = mapping;
  model.basis = basis;
  model.variational = prior_state(basis);
  model.likelihood = Likelihood::gaussian_noise(1.0);
  return model;
}

}  // namespace

ExactGprTruncated::ExactGprTruncated(const InducingBasis& basis, const SphereMapping& mapping,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::VectorXd>& y, double noise_variance)
    : basis_(basis), mapping_(mapping), tau2_(noise_variance) {
  if (X.rows() != y.size()) throw std::invalid_argument("exact_gpr: X and y row counts differ");
  if (X.rows() > 2000) throw std::invalid_argument("exact_gpr: dense oracle capped at N <= 2000");
  if (!(tau2_ > 0.0)) throw std::invalid_argument("exact_gpr: noise variance must be positive");

  VishModel model = oracle_model(basis_, mapping_);
  train_features_ = features(model, X);
  Eigen::MatrixXd gram = train_features_ * basis_.a_hat.asDiagonal() * train_features_.transpose();
  gram.diagonal().array() += tau2_;
  linalg_stats::count_factorization();
  llt_.compute(gram);
  if (llt_.info() != Eigen::Success)
    throw ConditioningError("exact_gpr: factorization of K + tau^2 I failed at N = " + std::to_string(X.rows()));
  alpha_ = llt_.solve(y);
}

Prediction ExactGprTruncated::predict(const Eigen::Ref<const Eigen::MatrixXd>& X_star) const {
  VishModel model = oracle_model(basis_, mapping_);
  Eigen::MatrixXd phi_star = features(model, X_star);
  Eigen::MatrixXd cross = phi_star * basis_.a_hat.asDiagonal() * train_features_.transpose();  // N* x N
  Prediction out;
  out.mean = cross * alpha_;
  Eigen::MatrixXd solved = llt_.solve(cross.transpose());  // N x N*
  out.var.resize(X_star.rows());
  for (Eigen::Index i = 0; i < X_star.rows(); ++i) {
    double prior = phi_star.row(i).cwiseAbs2().dot(basis_.a_hat);
    out.var(i) = prior - cross.row(i).dot(solved.col(i));
  }
  return out;
}

}  // namespace vish
