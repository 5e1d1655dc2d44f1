#include <doctest.h>

#include <cmath>

#include "vish/likelihood.hpp"

using namespace vish;

TEST_CASE("log_ndtr against erfc and the asymptotic tail") {
  CHECK(log_ndtr(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  for (double z : {-5.0, -2.0, -0.5, 0.5, 2.0, 5.0}) {
    double direct = std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
    CHECK(log_ndtr(z) == doctest::Approx(direct).epsilon(1e-12));
  }
  // continuity across the tail switch
  CHECK(log_ndtr(-29.999999) == doctest::Approx(log_ndtr(-30.000001)).epsilon(1e-12));
  CHECK(std::isfinite(log_ndtr(-200.0)));
  CHECK(log_ndtr(-200.0) < -19000.0);
}

TEST_CASE("gaussian expected log density closed form") {
  Likelihood lik = Likelihood::gaussian_noise(0.3);
  GaussRule unused;
  ExpectedLogLik e = expected_log_density(lik, 1.2, 0.7, 0.4, unused);
  double manual = -0.5 * std::log(2.0 * M_PI * 0.3) - (0.25 + 0.4) / (2.0 * 0.3);
  CHECK(e.value == doctest::Approx(manual).epsilon(1e-14));
  CHECK(e.d_mean == doctest::Approx(0.5 / 0.3).epsilon(1e-14));
  CHECK(e.d_var == doctest::Approx(-0.5 / 0.3).epsilon(1e-14));
}

TEST_CASE("bernoulli quadrature order convergence") {
  Likelihood l20 = Likelihood::bernoulli(LinkFunction::probit, 20);
  Likelihood l50 = Likelihood::bernoulli(LinkFunction::probit, 50);
  GaussRule gh20 = gauss_hermite_rule(20);
  GaussRule gh50 = gauss_hermite_rule(50);
  for (double mu : {-1.5, 0.0, 0.8}) {
    for (double var : {0.1, 0.7, 1.5}) {
      double a = expected_log_density(l20, 1.0, mu, var, gh20).value;
      double b = expected_log_density(l50, 1.0, mu, var, gh50).value;
      CHECK(std::abs(a - b) <= 1e-8);
    }
    // wider marginals converge more slowly
    double a = expected_log_density(l20, 1.0, mu, 3.0, gh20).value;
    double b = expected_log_density(l50, 1.0, mu, 3.0, gh50).value;
    CHECK(std::abs(a - b) <= 1e-6);
  }
}

TEST_CASE("bernoulli derivative identities by finite differences") {
  for (LinkFunction link : {LinkFunction::probit, LinkFunction::logit}) {
    Likelihood lik = Likelihood::bernoulli(link, 40);
    GaussRule gh = gauss_hermite_rule(40);
    const double h = 1e-6;
    for (double y : {0.0, 1.0}) {
      for (double mu : {-0.9, 0.4}) {
        for (double var : {0.2, 1.7}) {
          ExpectedLogLik e = expected_log_density(lik, y, mu, var, gh);
          double dmu_fd = (expected_log_density(lik, y, mu + h, var, gh).value -
                           expected_log_density(lik, y, mu - h, var, gh).value) /
                          (2 * h);
          double dvar_fd = (expected_log_density(lik, y, mu, var + h, gh).value -
                            expected_log_density(lik, y, mu, var - h, gh).value) /
                           (2 * h);
          CHECK(e.d_mean == doctest::Approx(dmu_fd).epsilon(1e-5));
          CHECK(e.d_var == doctest::Approx(dvar_fd).epsilon(1e-5));
        }
      }
    }
  }
}

TEST_CASE("probit predictive probability closed form equals quadrature") {
  Likelihood lik = Likelihood::bernoulli(LinkFunction::probit, 50);
  GaussRule gh = gauss_hermite_rule(50);
  for (double mu : {-2.0, 0.0, 1.3}) {
    for (double var : {0.05, 0.9, 4.0}) {
      double closed = predictive_probability(lik, mu, var, gh);
      // quadrature of Phi(f) under N(mu, var)
      double quad = 0.0;
      for (Eigen::Index i = 0; i < gh.nodes.size(); ++i)
        quad += gh.weights(i) * 0.5 * std::erfc(-(mu + std::sqrt(2.0 * var) * gh.nodes(i)) / std::sqrt(2.0));
      quad /= std::sqrt(M_PI);
      CHECK(closed == doctest::Approx(quad).epsilon(1e-10));
    }
  }
}

TEST_CASE("likelihood validation") {
  CHECK_THROWS_AS(Likelihood::gaussian_noise(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Likelihood::bernoulli(LinkFunction::probit, 5), std::invalid_argument);
  Likelihood lik = Likelihood::bernoulli(LinkFunction::probit, 20);
  GaussRule gh = gauss_hermite_rule(20);
  CHECK_THROWS_AS(expected_log_density(lik, 0.5, 0.0, 1.0, gh), std::invalid_argument);
}
