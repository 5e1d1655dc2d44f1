#include "vish/likelihood.hpp"

#include <cmath>
#include <stdexcept>

namespace vish {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kSqrtPi = 1.7724538509055160272981674833411;

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double check_binary(double y) {
  if (y != 0.0 && y != 1.0) throw std::invalid_argument("bernoulli likelihood: targets must be 0 or 1");
  return 2.0 * y - 1.0;
}

}  // namespace

Likelihood Likelihood::gaussian_noise(double tau2) {
  Likelihood lik;
  lik.type = Type::gaussian;
  lik.noise_variance = tau2;
  lik.validate();
  return lik;
}

Likelihood Likelihood::bernoulli(LinkFunction link, int quadrature_order) {
  Likelihood lik;
  lik.type = Type::bernoulli;
  lik.link = link;
  lik.quadrature_order = quadrature_order;
  lik.validate();
  return lik;
}

void Likelihood::validate() const {
  if (type == Type::gaussian && (!(noise_variance > 0.0) || !std::isfinite(noise_variance)))
    throw std::invalid_argument("likelihood: noise variance must be positive");
  if (type == Type::bernoulli && quadrature_order < 10)
    throw std::invalid_argument("likelihood: quadrature order must be at least 10");
}

double log_ndtr(double z) {
  if (z > 6.0) return -0.5 * std::erfc(z / std::sqrt(2.0));  // log(1 - eps) ~ -eps
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
  // asymptotic tail: log Phi(z) ~ -z^2/2 - log(-z sqrt(2 pi)) + log(series)
  double z2 = z * z;
  double series = -1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - 0.5 * kLog2Pi - std::log(-z) + std::log1p(series);
}

double log_density(const Likelihood& lik, double y, double f) {
  if (lik.type == Likelihood::Type::gaussian) {
    double r = y - f;
    return -0.5 * (kLog2Pi + std::log(lik.noise_variance)) - 0.5 * r * r / lik.noise_variance;
  }
  double sign = check_binary(y);
  if (lik.link == LinkFunction::probit) return log_ndtr(sign * f);
  return -softplus(-sign * f);
}

ExpectedLogLik expected_log_density(const Likelihood& lik, double y, double mu, double var,
                                    const GaussRule& gh) {
  if (!(var >= 0.0)) throw std::invalid_argument("expected_log_density: negative variance");
  ExpectedLogLik out;
  if (lik.type == Likelihood::Type::gaussian) {
    const double tau2 = lik.noise_variance;
    double r = y - mu;
    out.value = -0.5 * (kLog2Pi + std::log(tau2)) - 0.5 * (r * r + var) / tau2;
    out.d_mean = r / tau2;
    out.d_var = -0.5 / tau2;
    return out;
  }

  const double sign = check_binary(y);
  const double spread = std::sqrt(2.0 * var);
  // d_var differentiates the quadrature sum itself (node f_i = mu + spread x_i
  // moves with var), so the gradient is exact for the evaluated objective; at
  // var ~ 0 that form cancels catastrophically and the Gaussian identity
  // dE/dvar = E[f''] / 2 takes over as the limit.
  const bool tiny_var = var < 1e-10;
  double value = 0.0, d1 = 0.0, d2 = 0.0;
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
    double f = mu + spread * gh.nodes(i);
    double w = gh.weights(i);
    double z = sign * f;
    double grad_f, curv_f;
    if (lik.link == LinkFunction::probit) {
      double lp = log_ndtr(z);
      double ratio = std::exp(-0.5 * z * z - 0.5 * kLog2Pi - lp);  // pdf / cdf
      value += w * lp;
      grad_f = sign * ratio;
      curv_f = -ratio * (ratio + z);
    } else {
      double s = sigmoid(z);
      value += w * (-softplus(-z));
      grad_f = sign * (1.0 - s);
      curv_f = -s * (1.0 - s);
    }
    d1 += w * grad_f;
    d2 += tiny_var ? w * 0.5 * curv_f : w * grad_f * gh.nodes(i) / spread;
  }
  out.value = value / kSqrtPi;
  out.d_mean = d1 / kSqrtPi;
  out.d_var = d2 / kSqrtPi;
  return out;
}

double predictive_probability(const Likelihood& lik, double mu, double var, const GaussRule& gh) {
  if (lik.type != Likelihood::Type::bernoulli)
    throw std::invalid_argument("predictive_probability: bernoulli likelihoods only");
  if (lik.link == LinkFunction::probit) {
    return 0.5 * std::erfc(-mu / std::sqrt(2.0 * (1.0 + var)));
  }
  double acc = 0.0;
  const double spread = std::sqrt(2.0 * var);
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) acc += gh.weights(i) * sigmoid(mu + spread * gh.nodes(i));
  return acc / kSqrtPi;
}

}  // namespace vish
