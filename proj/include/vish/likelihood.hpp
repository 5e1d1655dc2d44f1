#pragma once

#include "vish/quadrature.hpp"

namespace vish {

enum class LinkFunction { probit, logit };

struct Likelihood {
  enum class Type { gaussian, bernoulli };

  Type type = Type::gaussian;
  double noise_variance = 1.0;  // tau^2, gaussian only
  LinkFunction link = LinkFunction::probit;
  int quadrature_order = 20;  // bernoulli only, >= 10

  static Likelihood gaussian_noise(double tau2);
  static Likelihood bernoulli(LinkFunction link, int quadrature_order);
  void validate() const;
};

// log Phi(z), stable for large negative z
double log_ndtr(double z);

// log p(y | f); classification targets are 0/1
double log_density(const Likelihood& lik, double y, double f);

struct ExpectedLogLik {
  double value = 0.0;
  double d_mean = 0.0;  // d/d mu
  double d_var = 0.0;   // d/d nu
};

// E_{N(mu, var)}[log p(y | f)] with partial derivatives. Gaussian is closed
// form; bernoulli uses the Gauss-Hermite rule `gh` (pass a rule of the
// likelihood's quadrature order).
ExpectedLogLik expected_log_density(const Likelihood& lik, double y, double mu, double var,
                                    const GaussRule& gh);

// E_{N(mu, var)}[p(y = 1 | f)]. Closed form for probit, quadrature for logit.
double predictive_probability(const Likelihood& lik, double mu, double var, const GaussRule& gh);

}  // namespace vish
