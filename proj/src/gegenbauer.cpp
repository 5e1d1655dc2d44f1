#include "vish/gegenbauer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vish {

namespace detail {

double clamp_unit_interval(double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("gegenbauer: non-finite argument");
  if (z > 1.0) {
    if (z > 1.0 + 1e-9) throw std::invalid_argument("gegenbauer: argument " + std::to_string(z) + " outside [-1, 1]");
    return 1.0;
  }
  if (z < -1.0) {
    if (z < -1.0 - 1e-9) throw std::invalid_argument("gegenbauer: argument " + std::to_string(z) + " outside [-1, 1]");
    return -1.0;
  }
  return z;
}

double gegenbauer_recurrence(double alpha, int degree, double z) {
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * alpha * z;
  for (int k = 2; k <= degree; ++k) {
    double next = (2.0 * (k - 1 + alpha) * z * cur - (k - 2 + 2.0 * alpha) * prev) / k;
    prev = cur;
    cur = next;
  }
  return cur;
}

void validate_alpha_degree(double alpha, int degree) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("gegenbauer: alpha must be positive");
  if (degree < 0) throw std::invalid_argument("gegenbauer: degree must be non-negative");
}

}  // namespace detail

GegenbauerPoly::GegenbauerPoly(double alpha, int degree) : alpha_(alpha), degree_(degree) {
  detail::validate_alpha_degree(alpha, degree);
  int half = degree / 2;
  coeffs_.resize(half + 1);
  // (-1)^k Gamma(l - k + a) / (Gamma(a) k! (l - 2k)!)
  for (int k = 0; k <= half; ++k) {
    double lg = std::lgamma(degree - k + alpha) - std::lgamma(alpha) - std::lgamma(k + 1.0) -
                std::lgamma(degree - 2.0 * k + 1.0);
    coeffs_[k] = (k % 2 == 0 ? 1.0 : -1.0) * std::exp(lg);
  }
}

double GegenbauerPoly::operator()(double z) const {
  z = detail::clamp_unit_interval(z);
  double w = 2.0 * z;
  double y = w * w;
  double acc = coeffs_[0];
  for (std::size_t k = 1; k < coeffs_.size(); ++k) acc = acc * y + coeffs_[k];
  if (degree_ % 2 == 1) acc *= w;
  return acc;
}

double gegenbauer_eval(double alpha, int degree, double z) {
  detail::validate_alpha_degree(alpha, degree);
  z = detail::clamp_unit_interval(z);
  if (degree <= detail::kGegenbauerExplicitMaxDegree) {
    return GegenbauerPoly(alpha, degree)(z);
  }
  return detail::gegenbauer_recurrence(alpha, degree, z);
}

double gegenbauer_at_one(double alpha, int degree) {
  detail::validate_alpha_degree(alpha, degree);
  double two_a = 2.0 * alpha;
  double lg = std::lgamma(two_a + degree) - std::lgamma(two_a) - std::lgamma(degree + 1.0);
  return std::exp(lg);
}

double gegenbauer_derivative(double alpha, int degree, double z) {
  detail::validate_alpha_degree(alpha, degree);
  if (degree == 0) return 0.0;
  return 2.0 * alpha * gegenbauer_eval(alpha + 1.0, degree - 1, z);
}

GegenbauerEvaluator::GegenbauerEvaluator(double alpha, int degree)
    : alpha_(alpha), degree_(degree), at_one_(gegenbauer_at_one(alpha, degree)) {
  if (degree <= detail::kGegenbauerExplicitMaxDegree) {
    coeffs_ = GegenbauerPoly(alpha, degree).monomial_coeffs();
  }
}

double GegenbauerEvaluator::operator()(double z) const {
  z = detail::clamp_unit_interval(z);
  if (coeffs_.empty()) return detail::gegenbauer_recurrence(alpha_, degree_, z);
  double w = 2.0 * z;
  double y = w * w;
  double acc = coeffs_[0];
  for (std::size_t k = 1; k < coeffs_.size(); ++k) acc = acc * y + coeffs_[k];
  if (degree_ % 2 == 1) acc *= w;
  return acc;
}

}  // namespace vish
