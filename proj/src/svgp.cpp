#include "vish/svgp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vish/errors.hpp"
#include "vish/gegenbauer.hpp"
#include "vish/linalg_stats.hpp"

namespace vish {

namespace {

constexpr double kDegenerateCoeff = 1e-300;
constexpr double kVarianceClamp = -1e-8;

void check_targets(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (X.rows() != y.size()) throw std::invalid_argument("svgp: X and y row counts differ");
  if (X.rows() == 0) throw std::invalid_argument("svgp: empty batch");
}

}  // namespace

InducingBasis build_inducing_basis(const KernelSpec& kernel, int max_degree, std::uint64_t seed,
                                   bool normalize_spectrum) {
  ZonalSpectrum spectrum = build_spectrum(kernel, max_degree, normalize_spectrum);
  std::vector<int> kept;
  for (int l = 0; l <= max_degree; ++l)
    if (spectrum.coeffs(l) > kDegenerateCoeff) kept.push_back(l);
  if (kept.empty()) throw NumericalError("build_inducing_basis: every Mercer coefficient vanished");
  HarmonicBasis basis = build_basis(kernel.ambient_dim, kept, seed);
  return inducing_basis_from_parts(std::move(basis), std::move(spectrum));
}

InducingBasis inducing_basis_from_parts(HarmonicBasis basis, ZonalSpectrum spectrum) {
  if (basis.ambient_dim != spectrum.kernel.ambient_dim)
    throw std::invalid_argument("inducing basis: harmonic and spectrum dimensions differ");
  if (basis.max_degree > spectrum.max_degree)
    throw std::invalid_argument("inducing basis: spectrum does not cover the harmonic degrees");
  InducingBasis out;
  out.a_hat.resize(basis.total_count);
  Eigen::Index offset = 0;
  for (const auto& level : basis.levels) {
    out.a_hat.segment(offset, level.count).setConstant(spectrum.coeffs(level.degree));
    offset += level.count;
  }
  out.harmonic_basis = std::move(basis);
  out.spectrum = std::move(spectrum);
  return out;
}

Eigen::VectorXd kuu_diag(const InducingBasis& basis) {
  Eigen::Index offset = 0;
  for (const auto& level : basis.harmonic_basis.levels) {
    if (!(basis.a_hat(offset) > kDegenerateCoeff))
      throw NumericalError("kuu_diag: degenerate coefficient at level " + std::to_string(level.degree));
    offset += level.count;
  }
  return basis.a_hat.cwiseInverse();
}

void VariationalState::validate() const {
  if (cov_factor.rows() != cov_factor.cols() || cov_factor.rows() != mean.size())
    throw std::invalid_argument("variational state: shape mismatch");
  for (Eigen::Index i = 0; i < cov_factor.rows(); ++i) {
    if (!(cov_factor(i, i) > 0.0))
      throw std::invalid_argument("variational state: cov factor diagonal must be positive");
    for (Eigen::Index j = i + 1; j < cov_factor.cols(); ++j)
      if (cov_factor(i, j) != 0.0)
        throw std::invalid_argument("variational state: cov factor must be lower triangular");
  }
}

VariationalState prior_state(const InducingBasis& basis) {
  VariationalState state;
  const Eigen::Index m = basis.num_features();
  state.mean = Eigen::VectorXd::Zero(m);
  state.cov_factor = Eigen::MatrixXd::Zero(m, m);
  state.cov_factor.diagonal() = basis.a_hat.cwiseSqrt().cwiseInverse();
  return state;
}

void VishModel::validate() const {
  kernel.validate();
  mapping.validate();
  likelihood.validate();
  if (mapping.ambient_dim() != basis.harmonic_basis.ambient_dim)
    throw std::invalid_argument("model: mapping ambient dimension " + std::to_string(mapping.ambient_dim()) +
                                " does not match basis dimension " +
                                std::to_string(basis.harmonic_basis.ambient_dim));
  if (kernel.ambient_dim != basis.harmonic_basis.ambient_dim)
    throw std::invalid_argument("model: kernel ambient dimension does not match basis");
  const KernelSpec& sk = basis.spectrum.kernel;
  bool hyper_match = sk.family == kernel.family && sk.ambient_dim == kernel.ambient_dim &&
                     std::abs(sk.variance - kernel.variance) <= 1e-12 * kernel.variance &&
                     (!kernel.has_lengthscale() ||
                      std::abs(sk.lengthscale - kernel.lengthscale) <= 1e-12 * kernel.lengthscale) &&
                     (kernel.family != KernelFamily::matern || sk.nu == kernel.nu);
  if (!hyper_match)
    throw std::invalid_argument("model: spectrum was built for different kernel hyperparameters");
  if (variational.mean.size() != basis.num_features())
    throw std::invalid_argument("model: variational state size does not match feature count");
  variational.validate();
}

VishModel make_model(const KernelSpec& kernel, const SphereMapping& mapping, const Likelihood& likelihood,
                     int max_degree, std::uint64_t seed, bool normalize_spectrum) {
  VishModel model;
  model.kernel = kernel;
  model.mapping = mapping;
  model.basis = build_inducing_basis(kernel, max_degree, seed, normalize_spectrum);
  model.variational = prior_state(model.basis);
  model.likelihood = likelihood;
  model.validate();
  return model;
}

namespace detail {

FeatureForward feature_forward(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                               bool keep_level_dots) {
  FeatureForward fwd;
  project_batch(model.mapping, X, fwd.U, fwd.r);
  const Eigen::Index batch = X.rows();
  fwd.scale.resize(batch);
  for (Eigen::Index i = 0; i < batch; ++i) fwd.scale(i) = feature_scale(model.mapping, fwd.r(i));

  const auto& levels = model.basis.harmonic_basis.levels;
  fwd.phi.resize(batch, model.basis.num_features());
  if (keep_level_dots) fwd.level_dots.reserve(levels.size());

  const double alpha = 0.5 * (model.basis.harmonic_basis.ambient_dim - 2);
  Eigen::Index offset = 0;
  for (const auto& level : levels) {
    GegenbauerEvaluator geg(alpha, level.degree);
    const double scale = (level.degree + alpha) / alpha;
    Eigen::MatrixXd dots = level.fundamental_points * fwd.U.transpose();  // count x batch
    Eigen::MatrixXd z(level.count, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      for (Eigen::Index i = 0; i < level.count; ++i)
        z(i, j) = scale * geg(std::min(1.0, std::max(-1.0, dots(i, j))));
    level.gram_factor.triangularView<Eigen::Lower>().solveInPlace(z);
    fwd.phi.middleCols(offset, level.count) = z.transpose();
    if (keep_level_dots) fwd.level_dots.push_back(std::move(dots));
    offset += level.count;
  }
  fwd.features = fwd.scale.asDiagonal() * fwd.phi;
  return fwd;
}

}  // namespace detail

Eigen::MatrixXd features(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  model.validate();
  return detail::feature_forward(model, X, false).features;
}

namespace {

struct MarginalForward {
  detail::FeatureForward fwd;
  Eigen::MatrixXd psi;        // features * diag(a_hat)
  Eigen::MatrixXd psi_ls;     // psi * L_S
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  double kappa_one = 0.0;     // truncated prior variance on the sphere
};

MarginalForward marginal_forward(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 bool keep_level_dots) {
  MarginalForward out;
  out.fwd = detail::feature_forward(model, X, keep_level_dots);
  const Eigen::VectorXd& a = model.basis.a_hat;
  out.kappa_one = a.sum();
  out.psi = out.fwd.features * a.asDiagonal();
  out.mean = out.psi * model.variational.mean;
  out.psi_ls.noalias() = out.psi * model.variational.cov_factor;
  Eigen::VectorXd quad_s = out.psi_ls.rowwise().squaredNorm();
  Eigen::VectorXd quad_k = (out.psi.array() * out.fwd.features.array()).rowwise().sum();
  out.var = (out.fwd.scale.array().square() * out.kappa_one + quad_s.array() - quad_k.array()).matrix();
  for (Eigen::Index i = 0; i < out.var.size(); ++i) {
    if (out.var(i) < 0.0) {
      if (out.var(i) < kVarianceClamp)
        throw NumericalError("predictive variance " + std::to_string(out.var(i)) + " below the clamp threshold at row " +
                             std::to_string(i));
      out.var(i) = 0.0;
    }
  }
  return out;
}

}  // namespace

Prediction predict_f(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  model.validate();
  MarginalForward mf = marginal_forward(model, X, false);
  return Prediction{std::move(mf.mean), std::move(mf.var)};
}

Eigen::MatrixXd predict_f_full_cov(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  model.validate();
  MarginalForward mf = marginal_forward(model, X, false);
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double prior = mf.fwd.scale(i) * mf.fwd.scale(j) *
                     kernel_eval_truncated(model.basis.spectrum, mf.fwd.U.row(i).dot(mf.fwd.U.row(j)));
      cov(i, j) = prior;
      cov(j, i) = prior;
    }
  cov.noalias() += mf.psi_ls * mf.psi_ls.transpose();
  cov.noalias() -= mf.psi * mf.fwd.features.transpose();
  return cov;
}

double kl_qu_pu(const VishModel& model) {
  const Eigen::VectorXd& a = model.basis.a_hat;
  const Eigen::VectorXd& m = model.variational.mean;
  const Eigen::MatrixXd& ls = model.variational.cov_factor;
  const Eigen::Index M = m.size();
  double trace_term = (a.array() * ls.rowwise().squaredNorm().array()).sum();
  double mean_term = (a.array() * m.array().square()).sum();
  double log_det_s = 2.0 * ls.diagonal().array().log().sum();
  double log_a = a.array().log().sum();
  return 0.5 * (trace_term + mean_term - static_cast<double>(M) - log_a - log_det_s);
}

namespace {

std::string parameter_snapshot(const VishModel& model) {
  std::ostringstream oss;
  oss << "kernel variance " << model.kernel.variance;
  if (model.kernel.has_lengthscale()) oss << ", lengthscale " << model.kernel.lengthscale;
  oss << ", bias " << model.mapping.bias << ", weights [";
  for (Eigen::Index j = 0; j < model.mapping.weights.size(); ++j)
    oss << (j ? ", " : "") << model.mapping.weights(j);
  oss << "], |m| " << model.variational.mean.norm();
  if (model.likelihood.type == Likelihood::Type::gaussian) oss << ", noise " << model.likelihood.noise_variance;
  return oss.str();
}

double elbo_value(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                  const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index total_N) {
  MarginalForward mf = marginal_forward(model, X, false);
  GaussRule gh;
  if (model.likelihood.type == Likelihood::Type::bernoulli)
    gh = gauss_hermite_rule(model.likelihood.quadrature_order);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    expected += expected_log_density(model.likelihood, y(i), mf.mean(i), mf.var(i), gh).value;
  double weight = static_cast<double>(total_N) / static_cast<double>(X.rows());
  return weight * expected - kl_qu_pu(model);
}

}  // namespace

double elbo_stochastic(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index total_N) {
  model.validate();
  check_targets(X, y);
  if (total_N < X.rows()) throw std::invalid_argument("elbo_stochastic: total_N smaller than the batch");
  double value = elbo_value(model, X, y, total_N);
  if (!std::isfinite(value))
    throw NumericalError("elbo_stochastic: non-finite ELBO; " + parameter_snapshot(model));
  return value;
}

ElboGradients elbo_with_gradients(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index total_N) {
  model.validate();
  check_targets(X, y);
  if (total_N < X.rows()) throw std::invalid_argument("elbo_with_gradients: total_N smaller than the batch");

  const Eigen::Index batch = X.rows();
  const Eigen::Index M = model.num_features();
  const Eigen::VectorXd& a = model.basis.a_hat;
  const Eigen::VectorXd& m = model.variational.mean;
  const Eigen::MatrixXd& ls = model.variational.cov_factor;
  const double weight = static_cast<double>(total_N) / static_cast<double>(batch);

  MarginalForward mf = marginal_forward(model, X, true);
  GaussRule gh;
  if (model.likelihood.type == Likelihood::Type::bernoulli)
    gh = gauss_hermite_rule(model.likelihood.quadrature_order);

  ElboGradients out;
  Eigen::VectorXd d_mu(batch), d_nu(batch);
  double expected = 0.0;
  out.d_log_noise = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    ExpectedLogLik ell = expected_log_density(model.likelihood, y(i), mf.mean(i), mf.var(i), gh);
    expected += ell.value;
    d_mu(i) = weight * ell.d_mean;
    d_nu(i) = weight * ell.d_var;
    if (model.likelihood.type == Likelihood::Type::gaussian) {
      double r = y(i) - mf.mean(i);
      out.d_log_noise += weight * (-0.5 + 0.5 * (r * r + mf.var(i)) / model.likelihood.noise_variance);
    }
  }
  out.value = weight * expected - kl_qu_pu(model);

  const Eigen::MatrixXd& phi_scaled = mf.fwd.features;  // batch x M (includes radial scale)
  const Eigen::MatrixXd& psi = mf.psi;

  // d_mean: likelihood mu-chain plus the KL mean term
  out.d_mean = psi.transpose() * d_mu - (a.array() * m.array()).matrix();

  // d_cov_factor: 2 (psi^T diag(d_nu) psi) L - diag(a) L + diag(1 / L_ii)
  Eigen::MatrixXd w_mat = psi.transpose() * d_nu.asDiagonal() * psi;
  Eigen::MatrixXd d_ls = 2.0 * (w_mat.selfadjointView<Eigen::Lower>() * ls);
  d_ls.noalias() -= a.asDiagonal() * ls;
  d_ls.diagonal() += ls.diagonal().cwiseInverse();
  out.d_cov_factor = d_ls.triangularView<Eigen::Lower>();

  // dPhi and d_a_hat, term by term:
  //   mu_n        = sum_m a_m Phi_nm m_m
  //   S-quad      = psi S psi^T          (via psi = a .* Phi)
  //   Kuu-quad    = - sum_m a_m Phi_nm^2
  //   prior       = scale_n^2 sum_m a_m
  Eigen::MatrixXd s_psi = mf.psi_ls * ls.transpose();  // psi S, batch x M
  Eigen::MatrixXd d_psi_s = 2.0 * d_nu.asDiagonal() * s_psi;
  Eigen::MatrixXd d_phi = d_psi_s * a.asDiagonal();
  d_phi.noalias() += d_mu * (a.array() * m.array()).matrix().transpose();
  d_phi.noalias() -= 2.0 * d_nu.asDiagonal() * psi;

  out.d_a_hat = d_psi_s.cwiseProduct(phi_scaled).colwise().sum().transpose();
  out.d_a_hat += (phi_scaled.transpose() * d_mu).cwiseProduct(m);
  out.d_a_hat -= (d_nu.asDiagonal() * phi_scaled.cwiseAbs2()).colwise().sum().transpose();
  out.d_a_hat.array() += (d_nu.array() * mf.fwd.scale.array().square()).sum();
  // KL a-hat term: d/da -KL = -1/2 (S_mm + m_m^2 - 1/a_m)
  out.d_a_hat -= 0.5 * (ls.rowwise().squaredNorm().array() + m.array().square() - a.array().inverse()).matrix();

  // radial scale: Phi = scale .* phi and the prior-variance term
  Eigen::VectorXd d_scale = (d_phi.array() * mf.fwd.phi.array()).rowwise().sum();
  d_scale.array() += 2.0 * d_nu.array() * mf.fwd.scale.array() * mf.kappa_one;

  // back through the harmonic levels into the projected points
  Eigen::MatrixXd d_phi_raw = mf.fwd.scale.asDiagonal() * d_phi;  // gradient wrt phi (no scale)
  Eigen::MatrixXd d_u = Eigen::MatrixXd::Zero(batch, mf.fwd.U.cols());
  const double alpha = 0.5 * (model.basis.harmonic_basis.ambient_dim - 2);
  Eigen::Index offset = 0;
  for (std::size_t li = 0; li < model.basis.harmonic_basis.levels.size(); ++li) {
    const HarmonicLevel& level = model.basis.harmonic_basis.levels[li];
    const double lscale = (level.degree + alpha) / alpha;
    Eigen::MatrixXd dz = d_phi_raw.middleCols(offset, level.count).transpose();  // count x batch
    level.gram_factor.transpose().triangularView<Eigen::Upper>().solveInPlace(dz);
    const Eigen::MatrixXd& dots = mf.fwd.level_dots[li];
    if (level.degree == 0) {
      dz.setZero();  // constant level, no spatial dependence
    } else {
      GegenbauerEvaluator dgeg(alpha + 1.0, level.degree - 1);
      const double dfactor = lscale * 2.0 * alpha;
      for (Eigen::Index j = 0; j < batch; ++j)
        for (Eigen::Index i = 0; i < level.count; ++i) {
          double t = std::min(1.0, std::max(-1.0, dots(i, j)));
          dz(i, j) *= dfactor * dgeg(t);
        }
    }
    d_u.noalias() += dz.transpose() * level.fundamental_points;
    offset += level.count;
  }

  // chain into the log mapping parameters
  const int d = model.mapping.ambient_dim();
  const bool linear = model.mapping.radial_mode == RadialMode::linear;
  out.d_mapping_log = Eigen::VectorXd::Zero(model.mapping.input_dim + 1);
  for (Eigen::Index n = 0; n < batch; ++n) {
    Eigen::MatrixXd jac = augmented_jacobian_log(model.mapping, X.row(n));  // d x (din+1)
    Eigen::RowVectorXd u = mf.fwd.U.row(n);
    Eigen::RowVectorXd du = d_u.row(n);
    // du/dtheta = (I - u u^T)/r J ; dr/dtheta = u J
    Eigen::RowVectorXd through_u = (du - (du.dot(u)) * u) / mf.fwd.r(n);
    Eigen::RowVectorXd total = through_u;
    if (linear) total += d_scale(n) * u;
    out.d_mapping_log += (total * jac).transpose();
  }

  if (!std::isfinite(out.value))
    throw NumericalError("elbo_with_gradients: non-finite ELBO; " + parameter_snapshot(model));
  return out;
}

CollapsedFit collapsed_gaussian_fit(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  model.validate();
  check_targets(X, y);
  if (model.likelihood.type != Likelihood::Type::gaussian)
    throw std::invalid_argument("collapsed_gaussian_fit: Gaussian likelihood required");
  const double tau2 = model.likelihood.noise_variance;
  const Eigen::Index n = X.rows();
  const Eigen::Index M = model.num_features();
  const Eigen::VectorXd& a = model.basis.a_hat;

  detail::FeatureForward fwd = detail::feature_forward(model, X, false);
  const Eigen::MatrixXd& phi = fwd.features;   // n x M (Kuf = phi^T)
  Eigen::MatrixXd phi_t_phi = phi.transpose() * phi;
  Eigen::VectorXd phi_t_y = phi.transpose() * y;

  // Sigma = Kuu + Kuf Kfu / tau^2, Kuu = diag(1/a)
  Eigen::MatrixXd sigma = phi_t_phi / tau2;
  sigma.diagonal() += a.cwiseInverse();

  linalg_stats::count_factorization();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    double jitter = 1e-10 * sigma.trace() / static_cast<double>(M);
    sigma.diagonal().array() += jitter;
    linalg_stats::count_factorization();
    llt.compute(sigma);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("collapsed_gaussian_fit: Sigma factorization failed even with jitter " +
                              std::to_string(jitter) + "; consider a larger noise variance");
  }

  CollapsedFit fit;
  // m* = Kuu Sigma^-1 Kuf y / tau^2
  Eigen::VectorXd solved = llt.solve(phi_t_y);
  fit.state.mean = solved.cwiseQuotient(a) / tau2;
  // S* = Kuu Sigma^-1 Kuu
  Eigen::MatrixXd sigma_inv = llt.solve(Eigen::MatrixXd::Identity(M, M));
  Eigen::MatrixXd s_star = a.cwiseInverse().asDiagonal() * sigma_inv * a.cwiseInverse().asDiagonal();
  linalg_stats::count_factorization();
  Eigen::LLT<Eigen::MatrixXd> s_llt(s_star);
  if (s_llt.info() != Eigen::Success)
    throw ConditioningError("collapsed_gaussian_fit: optimal covariance factorization failed");
  fit.state.cov_factor = s_llt.matrixL();

  // collapsed bound via M-dimensional identities:
  //   log |Qff + tau^2 I| = n log tau^2 + log |Sigma| + sum log a
  //   y^T (Qff + tau^2 I)^-1 y = (y^T y - y^T Phi Sigma^-1 Phi^T y / tau^2) / tau^2
  double log_det = n * std::log(tau2) + a.array().log().sum();
  for (Eigen::Index i = 0; i < M; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  double quad = (y.squaredNorm() - phi_t_y.dot(solved) / tau2) / tau2;
  Eigen::VectorXd q_diag = phi.cwiseAbs2() * a;
  double trace_term = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double k_ii = fwd.scale(i) * fwd.scale(i) * a.sum();
    trace_term += k_ii - q_diag(i);
  }
  fit.evidence_bound = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * log_det - 0.5 * quad - trace_term / (2.0 * tau2);
  return fit;
}

}  // namespace vish
