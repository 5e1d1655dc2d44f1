#include "vish/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "arc_cosine_exact.hpp"
#include "vish/errors.hpp"
#include "vish/gegenbauer.hpp"
#include "vish/quadrature.hpp"
#include "vish/sphere.hpp"

namespace vish {

namespace {

const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::arc_cosine_order1: return "arc_cosine";
    case KernelFamily::matern: return "matern";
    case KernelFamily::squared_exponential: return "squared_exponential";
  }
  return "?";
}

bool valid_nu(double nu) { return nu == 0.5 || nu == 1.5 || nu == 2.5; }

}  // namespace

KernelSpec KernelSpec::arc_cosine(double variance, int ambient_dim) {
  KernelSpec spec;
  spec.family = KernelFamily::arc_cosine_order1;
  spec.variance = variance;
  spec.ambient_dim = ambient_dim;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::matern_kernel(double nu, double variance, double lengthscale, int ambient_dim) {
  KernelSpec spec;
  spec.family = KernelFamily::matern;
  spec.nu = nu;
  spec.variance = variance;
  spec.lengthscale = lengthscale;
  spec.ambient_dim = ambient_dim;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::squared_exp(double variance, double lengthscale, int ambient_dim) {
  KernelSpec spec;
  spec.family = KernelFamily::squared_exponential;
  spec.variance = variance;
  spec.lengthscale = lengthscale;
  spec.ambient_dim = ambient_dim;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("kernel: variance must be positive");
  if (has_lengthscale() && (!(lengthscale > 0.0) || !std::isfinite(lengthscale)))
    throw std::invalid_argument("kernel: lengthscale must be positive");
  if (family == KernelFamily::matern && !valid_nu(nu))
    throw std::invalid_argument("kernel: matern nu must be one of 0.5, 1.5, 2.5");
  if (ambient_dim < 3 || ambient_dim > 10)
    throw DimensionError("kernel: ambient dimension " + std::to_string(ambient_dim) + " outside [3, 10]");
}

double shape_function(const KernelSpec& kernel, double t) {
  kernel.validate();
  if (kernel.family != KernelFamily::arc_cosine_order1)
    throw std::invalid_argument(std::string("shape_function: no closed-form shape for family ") +
                                family_name(kernel.family) + "; its on-sphere kernel is defined spectrally");
  t = detail::clamp_unit_interval(t);
  double theta = std::acos(t);
  return kernel.variance / M_PI * (std::sin(theta) + (M_PI - theta) * std::cos(theta));
}

double coeff_arc_cosine(int d, int degree) { return detail::arc_cosine_coefficient_exact(d, degree); }

double integral_sin_cos(int n, int m) { return detail::pipoly_to_double(detail::sin_cos_integral_exact(n, m)); }

double integral_weighted(int n, int m) { return detail::pipoly_to_double(detail::weighted_integral_exact(n, m)); }

double matern_spectral_density(const KernelSpec& kernel, double omega) {
  if (kernel.family != KernelFamily::matern)
    throw std::invalid_argument("matern_spectral_density: kernel family is not matern");
  if (!(omega >= 0.0)) throw std::invalid_argument("matern_spectral_density: omega must be >= 0");
  const double d = kernel.ambient_dim;
  const double nu = kernel.nu;
  const double rho = kernel.lengthscale;
  double log_c = d * std::log(2.0) + 0.5 * d * std::log(M_PI) + std::lgamma(nu + 0.5 * d) +
                 nu * std::log(2.0 * nu) - std::lgamma(nu) - 2.0 * nu * std::log(rho);
  double base = 2.0 * nu / (rho * rho) + 4.0 * M_PI * M_PI * omega * omega;
  return kernel.variance * std::exp(log_c - (nu + 0.5 * d) * std::log(base));
}

double se_spectral_density(const KernelSpec& kernel, double omega) {
  if (kernel.family != KernelFamily::squared_exponential)
    throw std::invalid_argument("se_spectral_density: kernel family is not squared_exponential");
  if (!(omega >= 0.0)) throw std::invalid_argument("se_spectral_density: omega must be >= 0");
  const double d = kernel.ambient_dim;
  const double rho2 = kernel.lengthscale * kernel.lengthscale;
  return kernel.variance * std::pow(2.0 * M_PI * rho2, 0.5 * d) *
         std::exp(-2.0 * M_PI * M_PI * rho2 * omega * omega);
}

double coeff_spectral(const KernelSpec& kernel, int d, int degree) {
  if (degree < 0) throw std::invalid_argument("coeff_spectral: negative degree");
  double lambda = static_cast<double>(degree) * (degree + d - 2);
  double omega = std::sqrt(lambda);
  switch (kernel.family) {
    case KernelFamily::matern: return matern_spectral_density(kernel, omega);
    case KernelFamily::squared_exponential: return se_spectral_density(kernel, omega);
    default:
      throw std::invalid_argument("coeff_spectral: spectral-density rule applies to matern / SE only");
  }
}

double coeff_spectral_dlog_dlog_lengthscale(const KernelSpec& kernel, int d, int degree) {
  double lambda = static_cast<double>(degree) * (degree + d - 2);
  const double rho = kernel.lengthscale;
  if (kernel.family == KernelFamily::matern) {
    const double nu = kernel.nu;
    double base = 2.0 * nu / (rho * rho) + 4.0 * M_PI * M_PI * lambda;
    return -2.0 * nu + (nu + 0.5 * d) * (4.0 * nu / (rho * rho)) / base;
  }
  if (kernel.family == KernelFamily::squared_exponential) {
    return d - 4.0 * M_PI * M_PI * rho * rho * lambda;
  }
  throw std::invalid_argument("coeff_spectral_dlog: spectral families only");
}

double funk_hecke_quadrature(const std::function<double(double)>& shape, int d, int degree, int n_nodes) {
  if (d < 3 || d > 10) throw DimensionError("funk_hecke_quadrature: d outside [3, 10]");
  if (degree < 0) throw std::invalid_argument("funk_hecke_quadrature: negative degree");
  if (n_nodes < degree + 8)
    throw std::invalid_argument("funk_hecke_quadrature: need n_nodes >= degree + 8, got " + std::to_string(n_nodes));
  const double alpha = 0.5 * (d - 2);
  GaussRule rule = gauss_gegenbauer_rule(alpha, n_nodes);
  GegenbauerEvaluator geg(alpha, degree);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights(i) * shape(rule.nodes(i)) * geg(rule.nodes(i));
  }
  return funk_hecke_constant(d) / geg.at_one() * acc;
}

double level_weight(int d, int degree) { return static_cast<double>(num_harmonics(d, degree)); }

ZonalSpectrum build_spectrum(const KernelSpec& kernel, int max_degree, bool normalize) {
  kernel.validate();
  if (max_degree < 0) throw std::invalid_argument("build_spectrum: negative max degree");
  ZonalSpectrum spectrum;
  spectrum.kernel = kernel;
  spectrum.max_degree = max_degree;
  spectrum.coeffs.resize(max_degree + 1);
  for (int l = 0; l <= max_degree; ++l) {
    double c;
    if (kernel.family == KernelFamily::arc_cosine_order1) {
      c = kernel.variance * coeff_arc_cosine(kernel.ambient_dim, l);
    } else {
      c = coeff_spectral(kernel, kernel.ambient_dim, l);
    }
    if (c < 0.0) {
      if (c < -1e-12) throw NumericalError("build_spectrum: negative Mercer coefficient at degree " + std::to_string(l));
      c = 0.0;
    }
    spectrum.coeffs(l) = c;
  }
  spectrum.normalized = normalize;
  if (normalize) {
    double prior_var = 0.0;
    for (int l = 0; l <= max_degree; ++l) prior_var += spectrum.coeffs(l) * level_weight(kernel.ambient_dim, l);
    if (!(prior_var > 0.0)) throw NumericalError("build_spectrum: truncated prior variance is not positive");
    spectrum.coeffs *= kernel.variance / prior_var;
  }
  return spectrum;
}

double kernel_eval_truncated(const ZonalSpectrum& spectrum, double t) {
  t = detail::clamp_unit_interval(t);
  const double alpha = spectrum.alpha();
  // single recurrence pass accumulates every degree
  double prev = 1.0;
  double cur = 2.0 * alpha * t;
  double acc = spectrum.coeffs(0) * 1.0;  // l = 0: scale 1, C_0 = 1
  if (spectrum.max_degree >= 1) acc += spectrum.coeffs(1) * ((1.0 + alpha) / alpha) * cur;
  for (int l = 2; l <= spectrum.max_degree; ++l) {
    double next = (2.0 * (l - 1 + alpha) * t * cur - (l - 2 + 2.0 * alpha) * prev) / l;
    prev = cur;
    cur = next;
    acc += spectrum.coeffs(l) * ((l + alpha) / alpha) * cur;
  }
  return acc;
}

Eigen::VectorXd spectrum_dlog_dlog_lengthscale(const ZonalSpectrum& spectrum) {
  const int L = spectrum.max_degree;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(L + 1);
  if (spectrum.kernel.family == KernelFamily::arc_cosine_order1) return g;
  for (int l = 0; l <= L; ++l)
    g(l) = coeff_spectral_dlog_dlog_lengthscale(spectrum.kernel, spectrum.kernel.ambient_dim, l);
  if (spectrum.normalized) {
    double total = 0.0, weighted = 0.0;
    for (int l = 0; l <= L; ++l) {
      double w = spectrum.coeffs(l) * level_weight(spectrum.kernel.ambient_dim, l);
      total += w;
      weighted += w * g(l);
    }
    if (total > 0.0) g.array() -= weighted / total;
  }
  return g;
}

}  // namespace vish
