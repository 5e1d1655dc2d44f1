#pragma once

#include <Eigen/Core>
#include <functional>

namespace vish {

enum class KernelFamily { arc_cosine_order1, matern, squared_exponential };

struct KernelSpec {
  KernelFamily family = KernelFamily::arc_cosine_order1;
  double variance = 1.0;     // sigma^2
  double lengthscale = 1.0;  // rho, matern / SE only
  double nu = 1.5;           // matern smoothness, one of 1/2, 3/2, 5/2
  int ambient_dim = 3;

  static KernelSpec arc_cosine(double variance, int ambient_dim);
  static KernelSpec matern_kernel(double nu, double variance, double lengthscale, int ambient_dim);
  static KernelSpec squared_exp(double variance, double lengthscale, int ambient_dim);

  void validate() const;
  bool has_lengthscale() const { return family != KernelFamily::arc_cosine_order1; }
};

// s(t) with k(x, x') = s(x . x') on the sphere. Closed form exists for the
// arc-cosine kernel only: (sigma^2/pi)(sin th + (pi - th) cos th), th = arccos t.
// Matern/SE on the sphere are defined through their spectral density and have
// no finite shape expression; calling this on them is an invalid argument.
double shape_function(const KernelSpec& kernel, double t);

// Mercer coefficient a_l of the unit-variance arc-cosine kernel on S^{d-1},
// evaluated in exact rational arithmetic from the parity-integral case
// analysis. Exactly zero for odd degrees >= 3.
double coeff_arc_cosine(int d, int degree);

// int_0^pi sin^n(x) cos^m(x) dx
double integral_sin_cos(int n, int m);

// int_0^pi (pi - x) sin^n(x) cos^m(x) dx
double integral_weighted(int n, int m);

// Matern spectral density on R^d (ordinary-frequency convention, includes sigma^2).
double matern_spectral_density(const KernelSpec& kernel, double omega);

// Gaussian spectral density matching the same frequency convention.
double se_spectral_density(const KernelSpec& kernel, double omega);

// a_l = S(sqrt(l (l + d - 2))) for matern / SE.
double coeff_spectral(const KernelSpec& kernel, int d, int degree);

// d log a_l / d log rho at the level eigenfrequency (raw, pre-normalization).
double coeff_spectral_dlog_dlog_lengthscale(const KernelSpec& kernel, int d, int degree);

// (omega_d / C_l(1)) sum_i w_i s(t_i) C_l(t_i) with the Gauss-Gegenbauer rule
// for weight exponent (d-3)/2. Requires n_nodes >= degree + 8.
double funk_hecke_quadrature(const std::function<double(double)>& shape, int d, int degree, int n_nodes);

struct ZonalSpectrum {
  KernelSpec kernel;
  int max_degree = 0;
  Eigen::VectorXd coeffs;  // a_0 .. a_L, all >= 0
  bool normalized = false;

  double alpha() const { return 0.5 * (kernel.ambient_dim - 2); }
};

// Per-level Mercer coefficients for degrees 0..max_degree. With normalize the
// coefficients are rescaled by a common factor so the truncated prior variance
// sum_l a_l ((l+alpha)/alpha) C_l(1) equals kernel.variance.
ZonalSpectrum build_spectrum(const KernelSpec& kernel, int max_degree, bool normalize);

// sum_l a_l ((l+alpha)/alpha) C_l(t)
double kernel_eval_truncated(const ZonalSpectrum& spectrum, double t);

// Per-level d log a_l / d log rho for the built spectrum, including the
// normalization chain when spectrum.normalized is set. Zero for arc-cosine.
Eigen::VectorXd spectrum_dlog_dlog_lengthscale(const ZonalSpectrum& spectrum);

// ((l+alpha)/alpha) C_l(1), the per-level harmonic count as a real number.
double level_weight(int d, int degree);

}  // namespace vish
