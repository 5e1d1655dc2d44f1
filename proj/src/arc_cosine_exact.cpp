#include "arc_cosine_exact.hpp"

#include <boost/math/constants/constants.hpp>
#include <stdexcept>

namespace vish::detail {

namespace {

using Float50 = boost::multiprecision::cpp_bin_float_50;

Rational binom_rational(int n, int k) {
  return Rational(factorial(n), factorial(k) * factorial(n - k));
}

// (n-1)!! (m-1)!! / (n+m)!!
Rational dfact_ratio(int n, int m) {
  return Rational(double_factorial(n - 1) * double_factorial(m - 1), double_factorial(n + m));
}

// int_0^pi cos^p dx : ((p-1)!!/p!!) pi for even p, 0 for odd
PiPoly cos_power_integral(int p) {
  if (p % 2 == 1) return PiPoly{};
  return pipoly_pi(Rational(double_factorial(p - 1), double_factorial(p)));
}

// int_0^pi sin^p dx : ((p-1)!!/p!!) * (pi even, 2 odd)
PiPoly sin_power_integral(int p) {
  Rational r(double_factorial(p - 1), double_factorial(p));
  if (p % 2 == 0) return pipoly_pi(r);
  return pipoly_const(2 * r);
}

// int_0^pi int_0^{x'} cos(2x)^p dx dx' : ((p-1)!!/p!!) pi^2/2 for even p, 0 odd
PiPoly double_cos_integral(int p) {
  if (p % 2 == 1) return PiPoly{};
  return pipoly_pi2(Rational(double_factorial(p - 1), 2 * double_factorial(p)));
}

// pochhammer a (a+1) ... (a+n-1)
Rational pochhammer(const Rational& a, int n) {
  Rational out = 1;
  for (int i = 0; i < n; ++i) out *= a + i;
  return out;
}

}  // namespace

PiPoly PiPoly::pi_shifted(int shift) const {
  PiPoly out;
  for (int k = 0; k < 5; ++k) {
    if (c[k] == 0) continue;
    int j = k + shift;
    if (j < 0 || j > 4) throw std::logic_error("PiPoly: pi power out of range");
    out.c[j] = c[k];
  }
  return out;
}

PiPoly pipoly_const(const Rational& r) {
  PiPoly p;
  p.c[2] = r;
  return p;
}

PiPoly pipoly_pi(const Rational& r) {
  PiPoly p;
  p.c[3] = r;
  return p;
}

PiPoly pipoly_pi2(const Rational& r) {
  PiPoly p;
  p.c[4] = r;
  return p;
}

double pipoly_to_double(const PiPoly& p) {
  const Float50 pi = boost::math::constants::pi<Float50>();
  Float50 total = 0;
  Float50 power = 1;
  // accumulate from pi^-2 upward
  Float50 inv_pi2 = 1 / (pi * pi);
  for (int k = 0; k < 5; ++k) {
    if (p.c[k] != 0) {
      Float50 coeff(p.c[k]);
      total += coeff * inv_pi2 * power;
    }
    power *= pi;
  }
  return static_cast<double>(total);
}

BigInt factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial of negative integer");
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

BigInt double_factorial(int n) {
  if (n < -1) throw std::invalid_argument("double factorial of integer below -1");
  BigInt out = 1;
  for (int i = n; i >= 2; i -= 2) out *= i;
  return out;
}

PiPoly sin_cos_integral_exact(int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("sin_cos_integral: negative power");
  if (m % 2 == 1) return PiPoly{};
  Rational r = dfact_ratio(n, m);
  if (n % 2 == 0) return pipoly_pi(r);  // n, m both even
  return pipoly_const(2 * r);           // n odd, m even
}

PiPoly weighted_integral_exact(int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("weighted_integral: negative power");
  PiPoly total;

  if (n % 2 == 1) {
    // v(x') = sum_i (-1)^{i+1} binom(n', i) (cos(x')^{2i+m+1} - 1) / (2i+m+1)
    int np = (n - 1) / 2;
    for (int i = 0; i <= np; ++i) {
      Rational coeff = binom_rational(np, i) / (2 * i + m + 1);
      if (i % 2 == 0) coeff = -coeff;
      PiPoly inner = cos_power_integral(2 * i + m + 1);
      inner += pipoly_pi(-1);
      total += inner.scaled(coeff);
    }
    return total;
  }

  if (m % 2 == 1) {
    // v(x') = sum_i (-1)^i binom(m', i) sin(x')^{2i+n+1} / (2i+n+1)
    int mp = (m - 1) / 2;
    for (int i = 0; i <= mp; ++i) {
      Rational coeff = binom_rational(mp, i) / (2 * i + n + 1);
      if (i % 2 == 1) coeff = -coeff;
      total += sin_power_integral(2 * i + n + 1).scaled(coeff);
    }
    return total;
  }

  // both even: double-angle expansion
  int np = n / 2, mp = m / 2;
  Rational scale = Rational(1, BigInt(1) << (np + mp));
  for (int i = 0; i <= np; ++i) {
    for (int j = 0; j <= mp; ++j) {
      Rational coeff = binom_rational(np, i) * binom_rational(mp, j) * scale;
      if (i % 2 == 1) coeff = -coeff;
      total += double_cos_integral(i + j).scaled(coeff);
    }
  }
  return total;
}

double arc_cosine_coefficient_exact(int d, int degree) {
  if (d < 3 || d > 10) throw std::invalid_argument("arc_cosine coefficient: d outside [3, 10]");
  if (degree < 0) throw std::invalid_argument("arc_cosine coefficient: negative degree");

  const Rational alpha(d - 2, 2);

  // integral of s(x) C_l(cos x) sin^{d-2} x over [0, pi], with
  // s(x) = (1/pi)(sin x + (pi - x) cos x) and the explicit monomial expansion
  // of C_l in powers of (2 cos x).
  PiPoly inner;
  for (int k = 0; k <= degree / 2; ++k) {
    int m = degree - 2 * k;
    Rational g = pochhammer(alpha, degree - k) / Rational(factorial(k) * factorial(m));
    if (k % 2 == 1) g = -g;
    g *= Rational(BigInt(1) << m);

    PiPoly term = sin_cos_integral_exact(d - 1, m);
    term += weighted_integral_exact(d - 2, m + 1);
    inner += term.scaled(g);
  }

  // C_l(1) = pochhammer(d - 2, l) / l!
  Rational c_one = pochhammer(Rational(d - 2), degree) / Rational(factorial(degree));

  // omega_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)); rational for odd d,
  // rational / pi for even d.
  Rational omega;
  int omega_pi_power;
  if (d % 2 == 1) {
    omega = Rational(double_factorial(d - 2), (BigInt(1) << ((d - 1) / 2)) * factorial((d - 3) / 2));
    omega_pi_power = 0;
  } else {
    omega = Rational(factorial(d / 2 - 1) * (BigInt(1) << ((d - 2) / 2)), double_factorial(d - 3));
    omega_pi_power = -1;
  }

  // assemble: (1/pi) * omega_d / C_l(1) * inner
  PiPoly result = inner.scaled(omega / c_one).pi_shifted(omega_pi_power - 1);
  return pipoly_to_double(result);
}

}  // namespace vish::detail
