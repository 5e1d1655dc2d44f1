#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vish/errors.hpp"
#include "vish/gegenbauer.hpp"
#include "vish/harmonics.hpp"
#include "vish/kernels.hpp"
#include "vish/rng.hpp"
#include "vish/sphere.hpp"

using namespace vish;

TEST_CASE("arc-cosine shape function") {
  KernelSpec k = KernelSpec::arc_cosine(2.0, 3);
  CHECK(shape_function(k, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(shape_function(k, -1.0) == doctest::Approx(0.0).epsilon(1e-14));
  KernelSpec unit = KernelSpec::arc_cosine(1.0, 3);
  CHECK(shape_function(unit, 0.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK_THROWS_AS(shape_function(unit, 1.1), std::invalid_argument);
  KernelSpec m = KernelSpec::matern_kernel(1.5, 1.0, 1.0, 3);
  CHECK_THROWS_AS(shape_function(m, 0.5), std::invalid_argument);
}

TEST_CASE("parity integrals: sin-cos table") {
  CHECK(integral_sin_cos(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(integral_sin_cos(0, 1) == 0.0);
  CHECK(integral_sin_cos(2, 2) == doctest::Approx(M_PI / 8.0).epsilon(1e-15));
  CHECK(integral_sin_cos(0, 0) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(integral_sin_cos(5, 3) == 0.0);
  // int sin^4 = 3 pi / 8
  CHECK(integral_sin_cos(4, 0) == doctest::Approx(3.0 * M_PI / 8.0).epsilon(1e-15));
}

TEST_CASE("parity integrals: weighted table against 50-digit quadrature") {
  CHECK(integral_weighted(0, 0) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-15));
  CHECK(integral_weighted(1, 0) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(integral_weighted(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(integral_weighted(2, 2) == doctest::Approx(0.6168502750680849136771557).epsilon(1e-15));
  CHECK(integral_weighted(3, 4) == doctest::Approx(0.1795195802051310421978653).epsilon(1e-15));
  CHECK(integral_weighted(4, 3) == doctest::Approx(0.08272108843537414965986395).epsilon(1e-15));
  CHECK(integral_weighted(5, 5) == doctest::Approx(0.02617993877991494365385536).epsilon(1e-15));
  CHECK(integral_weighted(7, 2) == doctest::Approx(0.1595729601823387041758803).epsilon(1e-15));
  CHECK(integral_weighted(2, 7) == doctest::Approx(0.1059813555051650289745528).epsilon(1e-15));
  CHECK(integral_weighted(6, 8) == doctest::Approx(0.01204785693492353347025695).epsilon(1e-15));
}

TEST_CASE("arc-cosine coefficients against 50-digit references") {
  CHECK(coeff_arc_cosine(3, 0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(coeff_arc_cosine(3, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(coeff_arc_cosine(3, 2) == doctest::Approx(0.0234375).epsilon(1e-15));
  CHECK(coeff_arc_cosine(3, 4) == doctest::Approx(0.00065104166666666667).epsilon(1e-14));
  CHECK(coeff_arc_cosine(3, 6) == doctest::Approx(0.000091552734375).epsilon(1e-14));
  CHECK(coeff_arc_cosine(3, 8) == doctest::Approx(0.00002288818359375).epsilon(1e-14));
  CHECK(coeff_arc_cosine(3, 10) == doctest::Approx(7.788340250651041666667e-6).epsilon(1e-14));
  CHECK(coeff_arc_cosine(3, 12) == doctest::Approx(3.21865081787109375e-6).epsilon(1e-14));
  CHECK(coeff_arc_cosine(5, 0) == doctest::Approx(0.3515625).epsilon(1e-15));
  CHECK(coeff_arc_cosine(5, 2) == doctest::Approx(0.009765625).epsilon(1e-15));
  CHECK(coeff_arc_cosine(5, 6) == doctest::Approx(0.00001373291015625).epsilon(1e-14));
  CHECK(coeff_arc_cosine(9, 1) == doctest::Approx(1.0 / 18.0).epsilon(1e-15));
  CHECK(coeff_arc_cosine(9, 2) == doctest::Approx(0.00336456298828125).epsilon(1e-14));
  CHECK(coeff_arc_cosine(7, 1) == doctest::Approx(1.0 / 14.0).epsilon(1e-15));
  // even-d path carries a 1/pi factor
  CHECK(coeff_arc_cosine(4, 0) == doctest::Approx(0.3602530973949787429116).epsilon(1e-14));
  CHECK(coeff_arc_cosine(4, 1) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(coeff_arc_cosine(4, 2) == doctest::Approx(0.01441012389579914971646).epsilon(1e-14));
  CHECK(coeff_arc_cosine(4, 4) == doctest::Approx(0.0002940841611387581574788).epsilon(1e-14));
  CHECK(coeff_arc_cosine(6, 2) == doctest::Approx(0.007058019867330195779492).epsilon(1e-14));
  CHECK(coeff_arc_cosine(8, 4) == doctest::Approx(0.0000345663660475308027156).epsilon(1e-14));
  CHECK(coeff_arc_cosine(10, 2) == doctest::Approx(0.002765309283802464217248).epsilon(1e-14));
}

TEST_CASE("arc-cosine coefficients vanish exactly on odd degrees >= 3") {
  for (int d : {3, 4, 5, 7, 9, 10}) {
    for (int l : {3, 5, 7, 9, 11}) {
      CHECK(coeff_arc_cosine(d, l) == 0.0);
    }
  }
  CHECK(coeff_arc_cosine(3, 1) > 0.0);
}

TEST_CASE("funk-hecke quadrature oracle") {
  auto one = [](double) { return 1.0; };
  for (int d = 3; d <= 10; ++d) {
    CHECK(funk_hecke_quadrature(one, d, 0, 64) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(funk_hecke_quadrature(one, d, 1, 64)) < 1e-12);
  }
}

TEST_CASE("closed form matches quadrature for the arc-cosine kernel") {
  KernelSpec unit3 = KernelSpec::arc_cosine(1.0, 3);
  for (int d : {3, 4, 5, 7, 9}) {
    KernelSpec unit = KernelSpec::arc_cosine(1.0, d);
    auto shape = [&](double t) { return shape_function(unit, t); };
    for (int l = 0; l <= 10; ++l) {
      double closed = coeff_arc_cosine(d, l);
      double quad = funk_hecke_quadrature(shape, d, l, 400);
      CAPTURE(d);
      CAPTURE(l);
      if (std::abs(closed) > 1e-11) {
        // high degrees have tiny coefficients; the quadrature error is absolute
        double tol = (l <= 6) ? 1e-8 : 1e-6;
        CHECK(std::abs(quad - closed) / std::abs(closed) < tol);
      } else {
        CHECK(std::abs(quad - closed) < 1e-11);
      }
    }
  }
  // spec example pair (d=3, l=0): hand value cross-checked by the oracle
  auto shape3 = [&](double t) { return shape_function(unit3, t); };
  CHECK(funk_hecke_quadrature(shape3, 3, 0, 200) == doctest::Approx(0.375).epsilon(1e-10));
}

TEST_CASE("matern spectral density") {
  KernelSpec k = KernelSpec::matern_kernel(0.5, 1.0, 1.0, 3);
  // 50-digit reference
  CHECK(matern_spectral_density(k, 1.0) == doctest::Approx(0.01533885021413861857605217).epsilon(1e-14));
  // direct substitution at omega = 0
  double d = 3, nu = 0.5, rho = 1.0;
  double expect0 = std::pow(2.0, d) * std::pow(M_PI, d / 2) * std::tgamma(nu + d / 2) * std::pow(2 * nu, nu) /
                   (std::tgamma(nu) * std::pow(rho, 2 * nu)) * std::pow(2 * nu / (rho * rho), -(nu + d / 2));
  CHECK(matern_spectral_density(k, 0.0) == doctest::Approx(expect0).epsilon(1e-13));
  // monotone decreasing
  double prev = matern_spectral_density(k, 0.0);
  for (double w : {0.3, 0.9, 2.0, 5.5}) {
    double cur = matern_spectral_density(k, w);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(matern_spectral_density(k, -1.0), std::invalid_argument);
}

TEST_CASE("spectral coefficients") {
  KernelSpec k = KernelSpec::matern_kernel(1.5, 1.3, 0.8, 3);
  CHECK(coeff_spectral(k, 3, 0) == doctest::Approx(matern_spectral_density(k, 0.0)).epsilon(1e-14));
  // l = 1, d = 3: eigenvalue 1 * (1 + 1) = 2
  CHECK(coeff_spectral(k, 3, 1) == doctest::Approx(matern_spectral_density(k, std::sqrt(2.0))).epsilon(1e-14));
  CHECK(coeff_spectral(k, 3, 5) < coeff_spectral(k, 3, 2));

  KernelSpec se = KernelSpec::squared_exp(1.0, 0.5, 4);
  CHECK(se_spectral_density(se, 0.0) > se_spectral_density(se, 1.0));
  CHECK(coeff_spectral(se, 4, 7) < coeff_spectral(se, 4, 2));
}

TEST_CASE("spectral log-lengthscale derivatives by finite differences") {
  for (auto family : {KernelFamily::matern, KernelFamily::squared_exponential}) {
    KernelSpec k;
    k.family = family;
    k.variance = 1.0;
    k.lengthscale = 0.7;
    k.nu = 2.5;
    k.ambient_dim = 5;
    const double h = 1e-6;
    // SE coefficients underflow past l ~ 5 at this lengthscale; stay in range
    std::vector<int> degrees = family == KernelFamily::matern ? std::vector<int>{0, 1, 4, 9}
                                                              : std::vector<int>{0, 1, 3, 4};
    for (int l : degrees) {
      KernelSpec up = k, dn = k;
      up.lengthscale = k.lengthscale * std::exp(h);
      dn.lengthscale = k.lengthscale * std::exp(-h);
      double fd = (std::log(coeff_spectral(up, 5, l)) - std::log(coeff_spectral(dn, 5, l))) / (2 * h);
      CHECK(coeff_spectral_dlog_dlog_lengthscale(k, 5, l) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("build_spectrum basics") {
  KernelSpec k = KernelSpec::matern_kernel(1.5, 2.0, 1.0, 3);
  ZonalSpectrum single = build_spectrum(k, 0, false);
  CHECK(single.coeffs.size() == 1);
  CHECK(kernel_eval_truncated(single, 0.2) == doctest::Approx(kernel_eval_truncated(single, -0.9)).epsilon(1e-14));

  ZonalSpectrum norm = build_spectrum(k, 30, true);
  double total = 0.0;
  for (int l = 0; l <= 30; ++l) total += norm.coeffs(l) * (2.0 * l + 1.0);
  CHECK(total == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(kernel_eval_truncated(norm, 1.0) == doctest::Approx(2.0).epsilon(1e-10));

  // matern coefficients strictly decreasing across levels
  for (int l = 1; l <= 30; ++l) CHECK(norm.coeffs(l) < norm.coeffs(l - 1));

  for (int l = 0; l <= 30; ++l) CHECK(norm.coeffs(l) >= 0.0);
}

TEST_CASE("arc-cosine truncation error decreases with L") {
  KernelSpec k = KernelSpec::arc_cosine(1.0, 3);
  SplitMix64 rng(99);
  std::vector<double> ts;
  for (int i = 0; i < 40; ++i) ts.push_back(2.0 * rng.uniform() - 1.0);
  double prev_err = -1.0;
  for (int L : {10, 20, 40}) {
    ZonalSpectrum spec = build_spectrum(k, L, false);
    double err = 0.0;
    for (double t : ts) err += std::abs(kernel_eval_truncated(spec, t) - shape_function(k, t));
    err /= ts.size();
    if (prev_err >= 0.0) CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("mercer consistency: truncated kernel equals the per-harmonic sum") {
  KernelSpec k = KernelSpec::matern_kernel(1.5, 1.0, 1.0, 3);
  ZonalSpectrum spec = build_spectrum(k, 5, false);
  HarmonicBasis basis = build_basis(3, 5, 3);
  Eigen::MatrixXd x = detail::sample_unit_vectors(3, 100, 4001);
  Eigen::MatrixXd y = detail::sample_unit_vectors(3, 100, 4002);
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(100);
  for (const auto& lv : basis.levels) {
    Eigen::MatrixXd px = eval_level(lv, x);
    Eigen::MatrixXd py = eval_level(lv, y);
    lhs += spec.coeffs(lv.degree) * (px.array() * py.array()).rowwise().sum().matrix();
  }
  for (int i = 0; i < 100; ++i) {
    double rhs = kernel_eval_truncated(spec, x.row(i).dot(y.row(i)));
    CHECK(std::abs(lhs(i) - rhs) <= 1e-7 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("normalized spectrum lengthscale gradient includes the chain") {
  KernelSpec k = KernelSpec::matern_kernel(1.5, 1.7, 0.9, 4);
  ZonalSpectrum spec = build_spectrum(k, 8, true);
  Eigen::VectorXd g = spectrum_dlog_dlog_lengthscale(spec);
  const double h = 1e-6;
  KernelSpec up = k, dn = k;
  up.lengthscale = k.lengthscale * std::exp(h);
  dn.lengthscale = k.lengthscale * std::exp(-h);
  ZonalSpectrum su = build_spectrum(up, 8, true);
  ZonalSpectrum sd = build_spectrum(dn, 8, true);
  for (int l = 0; l <= 8; ++l) {
    double fd = (std::log(su.coeffs(l)) - std::log(sd.coeffs(l))) / (2 * h);
    CHECK(g(l) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("kernel validation") {
  CHECK_THROWS_AS(KernelSpec::matern_kernel(1.0, 1.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::matern_kernel(1.5, -1.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::matern_kernel(1.5, 1.0, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::arc_cosine(1.0, 11), DimensionError);
  CHECK_THROWS_AS(funk_hecke_quadrature([](double) { return 1.0; }, 3, 20, 20), std::invalid_argument);
}
