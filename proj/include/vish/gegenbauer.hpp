#pragma once

#include <vector>

namespace vish {

// Gegenbauer (ultraspherical) polynomial C_l^(alpha) in its explicit monomial
// form: C_l(z) = sum_k coeffs[k] * (2z)^(l-2k), k = 0..floor(l/2), with
// coefficients assembled in log-Gamma space.
class GegenbauerPoly {
 public:
  GegenbauerPoly(double alpha, int degree);

  double alpha() const { return alpha_; }
  int degree() const { return degree_; }
  const std::vector<double>& monomial_coeffs() const { return coeffs_; }

  // Horner accumulation in powers of (2z). Accurate for moderate degree only;
  // see gegenbauer_eval for the general entry point.
  double operator()(double z) const;

 private:
  double alpha_;
  int degree_;
  std::vector<double> coeffs_;
};

// C_l^(alpha)(z) for z in [-1, 1]. Values within 1e-9 outside the interval
// are clamped; anything further (or non-finite) is an invalid argument.
// Uses the explicit polynomial sum for low degrees and the three-term
// recurrence above, where the alternating monomial sum cancels catastrophically.
double gegenbauer_eval(double alpha, int degree, double z);

// C_l^(alpha)(1) = Gamma(2a + l) / (Gamma(2a) l!), computed in log-Gamma space.
double gegenbauer_at_one(double alpha, int degree);

// d/dz C_l^(alpha)(z) = 2 alpha C_{l-1}^(alpha+1)(z)
double gegenbauer_derivative(double alpha, int degree, double z);

// Snapshot of (alpha, degree) for repeated evaluation over batches. Same
// dispatch as gegenbauer_eval but the monomial coefficients are built once.
class GegenbauerEvaluator {
 public:
  GegenbauerEvaluator(double alpha, int degree);
  double operator()(double z) const;
  double at_one() const { return at_one_; }

 private:
  double alpha_;
  int degree_;
  double at_one_;
  std::vector<double> coeffs_;  // empty when the recurrence path is used
};

namespace detail {

// z clamped to [-1, 1]; |z| > 1 + 1e-9 or non-finite throws.
double clamp_unit_interval(double z);

double gegenbauer_recurrence(double alpha, int degree, double z);

// degree at or below which the explicit monomial sum is used; above this the
// alternating sum costs more than 1e-10 of absolute accuracy
inline constexpr int kGegenbauerExplicitMaxDegree = 14;

}  // namespace detail

}  // namespace vish
