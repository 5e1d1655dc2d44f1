#pragma once

// Exact evaluation of the arc-cosine parity integrals. Every integral
// int_0^pi [sin x + (pi - x) cos x] cos^n x sin^m x dx lies in the rational
// span of {1, pi, pi^2}, so the whole Mercer coefficient can be carried as
// rational coefficients of pi powers and rounded once at the end.

#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace vish::detail {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// value = sum_k c[k] * pi^(k - 2)
struct PiPoly {
  std::array<Rational, 5> c{};

  PiPoly& operator+=(const PiPoly& o) {
    for (int k = 0; k < 5; ++k) c[k] += o.c[k];
    return *this;
  }
  PiPoly scaled(const Rational& r) const {
    PiPoly out;
    for (int k = 0; k < 5; ++k) out.c[k] = c[k] * r;
    return out;
  }
  // multiply by pi^shift
  PiPoly pi_shifted(int shift) const;
};

PiPoly pipoly_const(const Rational& r);
PiPoly pipoly_pi(const Rational& r);     // r * pi
PiPoly pipoly_pi2(const Rational& r);    // r * pi^2

double pipoly_to_double(const PiPoly& p);

BigInt factorial(int n);
BigInt double_factorial(int n);  // (-1)!! = 0!! = 1

// int_0^pi sin^n cos^m dx
PiPoly sin_cos_integral_exact(int n, int m);

// int_0^pi (pi - x) sin^n cos^m dx
PiPoly weighted_integral_exact(int n, int m);

// Mercer coefficient of the unit-variance arc-cosine kernel, exact up to the
// final double rounding.
double arc_cosine_coefficient_exact(int d, int degree);

}  // namespace vish::detail
