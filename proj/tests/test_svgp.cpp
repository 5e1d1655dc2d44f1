#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "support/test_models.hpp"
#include "vish/errors.hpp"
#include "vish/exact_gpr.hpp"
#include "vish/linalg_stats.hpp"
#include "vish/metrics.hpp"
#include "vish/svgp.hpp"

using namespace vish;
using vish::testing::random_inputs;
using vish::testing::randomize_state;
using vish::testing::small_gaussian_model;

namespace {

// Eq.-1 reference that materializes Kuu and solves explicitly
Prediction dense_reference_predict(const VishModel& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd phi = features(model, X);
  Eigen::MatrixXd kuu = kuu_diag(model.basis).asDiagonal();
  Eigen::MatrixXd kuf = phi.transpose();  // M x N
  const Eigen::MatrixXd& ls = model.variational.cov_factor;
  Eigen::MatrixXd s = ls * ls.transpose();
  Eigen::MatrixXd kuu_inv_kuf = kuu.ldlt().solve(kuf);
  Prediction out;
  out.mean = kuu_inv_kuf.transpose() * model.variational.mean;
  out.var.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Projection p = project(model.mapping, X.row(i));
    double k_ii = feature_scale(model.mapping, p.radius) * feature_scale(model.mapping, p.radius) *
                  kernel_eval_truncated(model.basis.spectrum, 1.0);
    out.var(i) = k_ii + kuu_inv_kuf.col(i).dot((s - kuu) * kuu_inv_kuf.col(i));
  }
  return out;
}

double dense_gaussian_kl(const Eigen::VectorXd& m, const Eigen::MatrixXd& s, const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> lp(p);
  double logdet_p = 2.0 * Eigen::MatrixXd(lp.matrixL()).diagonal().array().log().sum();
  Eigen::LLT<Eigen::MatrixXd> lsq(s);
  double logdet_s = 2.0 * Eigen::MatrixXd(lsq.matrixL()).diagonal().array().log().sum();
  double trace = lp.solve(s).trace();
  double quad = m.dot(lp.solve(m));
  return 0.5 * (trace + quad - m.size() + logdet_p - logdet_s);
}

}  // namespace

TEST_CASE("kuu diagonal") {
  VishModel model = small_gaussian_model(2, 3, 11);
  Eigen::VectorXd kuu = kuu_diag(model.basis);
  CHECK(kuu.size() == model.num_features());
  // level-constant entries and increasing across levels for matern
  Eigen::Index offset = 0;
  double prev = 0.0;
  for (const auto& level : model.basis.harmonic_basis.levels) {
    for (Eigen::Index k = 1; k < level.count; ++k) CHECK(kuu(offset + k) == kuu(offset));
    CHECK(kuu(offset) > prev);
    prev = kuu(offset);
    offset += level.count;
  }
  CHECK((kuu.array() * model.basis.a_hat.array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("features: level-0 column is constant in constant mode") {
  VishModel model = small_gaussian_model(3, 2, 5);
  Eigen::MatrixXd x = random_inputs(9, 3, 21);
  Eigen::MatrixXd phi = features(model, x);
  CHECK(phi.rows() == 9);
  CHECK(phi.cols() == model.num_features());
  for (Eigen::Index i = 1; i < 9; ++i) CHECK(phi(i, 0) == doctest::Approx(phi(0, 0)).epsilon(1e-13));

  VishModel tiny = small_gaussian_model(2, 0, 5);
  Eigen::MatrixXd single = features(tiny, random_inputs(1, 2, 3));
  CHECK(single.rows() == 1);
  CHECK(single.cols() == 1);
  CHECK(single(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feature gram reproduces the truncated kernel") {
  VishModel model = small_gaussian_model(3, 4, 2);
  Eigen::MatrixXd x = random_inputs(20, 3, 77);
  Eigen::MatrixXd phi = features(model, x);
  Eigen::MatrixXd gram = phi * model.basis.a_hat.asDiagonal() * phi.transpose();
  Eigen::MatrixXd u;
  Eigen::VectorXd r;
  project_batch(model.mapping, x, u, r);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      double expected = kernel_eval_truncated(model.basis.spectrum, u.row(i).dot(u.row(j)));
      CHECK(std::abs(gram(i, j) - expected) <= 1e-7 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("predict_f recovers the prior at the initial state") {
  VishModel model = small_gaussian_model(2, 3, 1);
  Eigen::MatrixXd x = random_inputs(15, 2, 4);
  Prediction pred = predict_f(model, x);
  double prior_var = kernel_eval_truncated(model.basis.spectrum, 1.0);
  for (int i = 0; i < 15; ++i) {
    CHECK(pred.mean(i) == 0.0);
    CHECK(pred.var(i) == doctest::Approx(prior_var).epsilon(1e-10));
  }
}

TEST_CASE("predict_f is linear in the variational mean") {
  VishModel model = small_gaussian_model(2, 2, 1);
  model.variational.mean(0) = 1.0 / model.basis.a_hat(0);
  Eigen::MatrixXd x = random_inputs(6, 2, 9);
  Prediction pred = predict_f(model, x);
  Eigen::MatrixXd phi = features(model, x);
  double prior_var = kernel_eval_truncated(model.basis.spectrum, 1.0);
  for (int i = 0; i < 6; ++i) {
    CHECK(pred.mean(i) == doctest::Approx(phi(i, 0)).epsilon(1e-12));
    CHECK(pred.var(i) == doctest::Approx(prior_var).epsilon(1e-10));
  }
}

TEST_CASE("predict_f matches the dense Eq.-1 reference") {
  VishModel model = small_gaussian_model(3, 3, 8, 0.05, RadialMode::linear);
  randomize_state(model, 1234);
  Eigen::MatrixXd x = random_inputs(30, 3, 55);
  Prediction fast = predict_f(model, x);
  Prediction dense = dense_reference_predict(model, x);
  for (int i = 0; i < 30; ++i) {
    CHECK(fast.mean(i) == doctest::Approx(dense.mean(i)).epsilon(1e-9));
    CHECK(std::abs(fast.var(i) - dense.var(i)) <= 1e-9 * std::max(1.0, std::abs(dense.var(i))));
  }
}

TEST_CASE("full covariance diagonal agrees with marginals") {
  VishModel model = small_gaussian_model(2, 3, 8);
  randomize_state(model, 99);
  Eigen::MatrixXd x = random_inputs(12, 2, 13);
  Prediction marg = predict_f(model, x);
  Eigen::MatrixXd cov = predict_f_full_cov(model, x);
  for (int i = 0; i < 12; ++i) CHECK(cov(i, i) == doctest::Approx(marg.var(i)).epsilon(1e-9));
  CHECK((cov - cov.transpose()).norm() < 1e-12);
}

TEST_CASE("kl divergence against the dense two-gaussian oracle") {
  VishModel model = small_gaussian_model(2, 1, 3);  // M = 4
  SUBCASE("zero at the prior") { CHECK(kl_qu_pu(model) == doctest::Approx(0.0).epsilon(1e-12)); }
  SUBCASE("mean shift only") {
    model.variational.mean.setConstant(0.3);
    double expected = 0.5 * (model.basis.a_hat.array() * 0.09).sum();
    CHECK(kl_qu_pu(model) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("random state matches the dense formula") {
    randomize_state(model, 31);
    Eigen::MatrixXd s = model.variational.cov_factor * model.variational.cov_factor.transpose();
    Eigen::MatrixXd prior = kuu_diag(model.basis).asDiagonal();
    double expected = dense_gaussian_kl(model.variational.mean, s, prior);
    CHECK(kl_qu_pu(model) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("gaussian elbo equals the assembly from predict_f") {
  VishModel model = small_gaussian_model(2, 2, 6);
  randomize_state(model, 17);
  Eigen::MatrixXd x = random_inputs(25, 2, 8);
  SplitMix64 rng(880);
  Eigen::VectorXd y(25);
  for (int i = 0; i < 25; ++i) y(i) = rng.gaussian();

  double elbo = elbo_stochastic(model, x, y, 25);
  Prediction pred = predict_f(model, x);
  double tau2 = model.likelihood.noise_variance;
  double manual = 0.0;
  for (int i = 0; i < 25; ++i) {
    double r = y(i) - pred.mean(i);
    manual += -0.5 * std::log(2.0 * M_PI * tau2) - 0.5 * (r * r + pred.var(i)) / tau2;
  }
  manual -= kl_qu_pu(model);
  CHECK(elbo == doctest::Approx(manual).epsilon(1e-10));
}

TEST_CASE("bernoulli elbo is stable in the quadrature order") {
  // unit prior variance keeps the marginals inside the rule's sweet spot
  VishModel m20 = vish::testing::small_bernoulli_model(2, 2, 6, 20, LinkFunction::probit, true);
  VishModel m50 = vish::testing::small_bernoulli_model(2, 2, 6, 50, LinkFunction::probit, true);
  randomize_state(m20, 5);
  randomize_state(m50, 5);
  Eigen::MatrixXd x = random_inputs(30, 2, 71);
  Eigen::VectorXd y(30);
  SplitMix64 rng(4);
  for (int i = 0; i < 30; ++i) y(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  CHECK(std::abs(elbo_stochastic(m20, x, y, 30) - elbo_stochastic(m50, x, y, 30)) <= 1e-8);
}

TEST_CASE("rescaling a_hat with the matching state transform leaves predictions invariant") {
  VishModel model = small_gaussian_model(2, 3, 12, 0.05, RadialMode::linear);
  randomize_state(model, 461);
  Eigen::MatrixXd x = random_inputs(10, 2, 5);
  Prediction base = predict_f(model, x);

  const double c = 4.0;
  VishModel scaled = model;
  scaled.basis.a_hat *= c;
  scaled.basis.spectrum.coeffs *= c;
  scaled.basis.spectrum.kernel.variance *= c;
  scaled.kernel.variance *= c;
  scaled.variational.mean /= c;
  scaled.variational.cov_factor /= c;
  Prediction moved = predict_f(scaled, x);
  for (int i = 0; i < 10; ++i) {
    CHECK(moved.mean(i) == doctest::Approx(base.mean(i)).epsilon(1e-9));
    CHECK(std::abs(moved.var(i) - base.var(i)) <= 1e-9 * std::max(1.0, base.var(i)));
  }
}

TEST_CASE("collapsed fit with huge noise returns the prior") {
  VishModel model = small_gaussian_model(2, 2, 9, 1e12);
  Eigen::MatrixXd x = random_inputs(20, 2, 3);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, -1.0, 1.0);
  CollapsedFit fit = collapsed_gaussian_fit(model, x, y);
  CHECK(fit.state.mean.norm() < 1e-9);
  Eigen::VectorXd prior_diag = model.basis.a_hat.cwiseSqrt().cwiseInverse();
  for (Eigen::Index i = 0; i < prior_diag.size(); ++i)
    CHECK(fit.state.cov_factor(i, i) == doctest::Approx(prior_diag(i)).epsilon(1e-6));
}

TEST_CASE("collapsed fit equals dense gp regression on the truncated kernel") {
  for (int d_in : {1, 3}) {
    VishModel model = small_gaussian_model(d_in, 4, 100 + d_in, 0.02, RadialMode::linear);
    Eigen::MatrixXd x = random_inputs(40, d_in, 600 + d_in);
    SplitMix64 rng(9000 + d_in);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y(i) = std::sin(1.7 * x(i, 0)) + 0.1 * rng.gaussian();

    CollapsedFit fit = collapsed_gaussian_fit(model, x, y);
    VishModel fitted = model;
    fitted.variational = fit.state;

    ExactGprTruncated oracle(model.basis, model.mapping, x, y, model.likelihood.noise_variance);
    Eigen::MatrixXd xs = random_inputs(25, d_in, 31);
    Prediction sparse = predict_f(fitted, xs);
    Prediction dense = oracle.predict(xs);
    for (int i = 0; i < 25; ++i) {
      CHECK(std::abs(sparse.mean(i) - dense.mean(i)) <= 1e-6 * std::max(1.0, std::abs(dense.mean(i))));
      CHECK(std::abs(sparse.var(i) - dense.var(i)) <= 1e-6 * std::max(1.0, dense.var(i)));
    }
  }
}

TEST_CASE("collapsed bound dominates the elbo at other states") {
  VishModel model = small_gaussian_model(2, 3, 41, 0.1);
  Eigen::MatrixXd x = random_inputs(30, 2, 17);
  SplitMix64 rng(5150);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y(i) = std::cos(x(i, 0)) + 0.3 * rng.gaussian();
  CollapsedFit fit = collapsed_gaussian_fit(model, x, y);

  VishModel at_opt = model;
  at_opt.variational = fit.state;
  double elbo_at_opt = elbo_stochastic(at_opt, x, y, 30);
  CHECK(fit.evidence_bound == doctest::Approx(elbo_at_opt).epsilon(1e-8));

  for (int rep = 0; rep < 20; ++rep) {
    VishModel other = model;
    randomize_state(other, 7000 + rep);
    CHECK(elbo_stochastic(other, x, y, 30) <= fit.evidence_bound + 1e-9);
  }
}

TEST_CASE("collapsed bound is monotone over nested level sets") {
  Eigen::MatrixXd x = random_inputs(60, 2, 2025);
  SplitMix64 rng(77);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) y(i) = std::sin(2.0 * x(i, 0)) * std::cos(x(i, 1)) + 0.05 * rng.gaussian();
  double prev = -std::numeric_limits<double>::infinity();
  for (int cap = 0; cap <= 4; ++cap) {
    VishModel model = small_gaussian_model(2, cap, 4, 0.05);
    double bound = collapsed_gaussian_fit(model, x, y).evidence_bound;
    CHECK(bound >= prev - 1e-9);
    prev = bound;
  }
}

TEST_CASE("weight-space prior samples reproduce the truncated kernel covariance") {
  VishModel model = small_gaussian_model(2, 3, 33);
  Eigen::MatrixXd x = random_inputs(4, 2, 21);
  Eigen::MatrixXd phi = features(model, x);
  Eigen::VectorXd root_a = model.basis.a_hat.cwiseSqrt();
  const int draws = 100000;
  SplitMix64 rng(5511);
  Eigen::MatrixXd weighted = phi * root_a.asDiagonal();  // f = weighted * eps
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(4, 4);
  Eigen::VectorXd eps(model.num_features());
  Eigen::VectorXd f(4);
  for (int s = 0; s < draws; ++s) {
    for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = rng.gaussian();
    f = weighted * eps;
    second += f * f.transpose();
  }
  second /= draws;
  Eigen::MatrixXd u;
  Eigen::VectorXd r;
  project_batch(model.mapping, x, u, r);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double expected = kernel_eval_truncated(model.basis.spectrum, u.row(i).dot(u.row(j)));
      // var(f_i f_j) = k_ii k_jj + k_ij^2 for gaussians
      double mc_se = std::sqrt((second(i, i) * second(j, j) + expected * expected) / draws);
      CHECK(std::abs(second(i, j) - expected) <= 4.0 * mc_se);
    }
}

TEST_CASE("prediction and elbo paths perform no factorizations") {
  VishModel model = small_gaussian_model(2, 3, 64);
  randomize_state(model, 3);
  Eigen::MatrixXd x = random_inputs(50, 2, 41);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(50);
  auto before = linalg_stats::factorizations();
  predict_f(model, x);
  elbo_stochastic(model, x, y, 50);
  elbo_with_gradients(model, x, y, 50);
  predict_f_full_cov(model, x);
  CHECK(linalg_stats::factorizations() == before);
  collapsed_gaussian_fit(model, x, y);
  CHECK(linalg_stats::factorizations() > before);
}

TEST_CASE("degenerate arc-cosine levels are excluded at construction") {
  SphereMapping mapping = SphereMapping::create(2, RadialMode::linear);
  KernelSpec kernel = KernelSpec::arc_cosine(1.0, 3);
  InducingBasis basis = build_inducing_basis(kernel, 6, 1, false);
  // levels 0,1,2,4,6 survive; odd levels >= 3 vanish
  std::vector<int> degrees;
  for (const auto& level : basis.harmonic_basis.levels) degrees.push_back(level.degree);
  CHECK(degrees == std::vector<int>{0, 1, 2, 4, 6});
  CHECK(basis.num_features() == 1 + 3 + 5 + 9 + 13);
  CHECK_NOTHROW(kuu_diag(basis));
}

TEST_CASE("model validation catches mismatches") {
  VishModel model = small_gaussian_model(2, 2, 13);
  VishModel broken = model;
  broken.variational.mean = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  VishModel wrong_dim = model;
  wrong_dim.mapping = SphereMapping::create(4, RadialMode::linear);
  CHECK_THROWS_AS(wrong_dim.validate(), std::invalid_argument);
}
