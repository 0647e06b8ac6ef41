#pragma once

// Modified Bessel function K_1 and the Matérn(nu = 1) correlation.

#include <cmath>
#include <limits>

#include "face/errors.hpp"

namespace face {

// K_1(x) for x > 0: power series for x <= 2, Steed/Temme continued fraction
// beyond. Relative accuracy ~1e-15 across the range.
inline double bessel_k1(double x) {
  if (!(x > 0.0)) {
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    throw InputError("bessel_k1: argument must be positive");
  }
  constexpr double eps = 1e-16;
  if (x <= 2.0) {
    constexpr double euler_gamma = 0.57721566490153286060651209;
    const double q = 0.25 * x * x;
    double term = 1.0;  // (x^2/4)^k / (k! (k+1)!)
    double psi_a = -euler_gamma;  // psi(k+1)
    double psi_b = 1.0 - euler_gamma;  // psi(k+2)
    double i1_sum = 0.0, k_sum = 0.0;
    for (int k = 0; k < 100; ++k) {
      i1_sum += term;
      k_sum += (psi_a + psi_b) * term;
      psi_a += 1.0 / double(k + 1);
      psi_b += 1.0 / double(k + 2);
      term *= q / (double(k + 1) * double(k + 2));
      if (term < eps * i1_sum) break;
    }
    const double i1 = 0.5 * x * i1_sum;
    return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * k_sum;
  }
  if (x > 700.0) return 0.0;
  // Order mu = 0 continued fraction; yields K_0 and K_1 together.
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 10000; ++i) {
    a -= 2.0 * double(i - 1);
    c = -a * c / double(i);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h *= a1;
  const double k0 = std::sqrt(M_PI / (2.0 * x)) * std::exp(-x) / s;
  return k0 * (x + 0.5 - h) / x;
}

// How distance is scaled inside the Bessel argument.
enum class MaternScaling {
  range,     // u = d / phi
  sqrt_2nu,  // u = sqrt(2 nu) d / phi
};

// C(d) = u^nu K_nu(u) / (2^{nu-1} Gamma(nu)), C(0) = 1. Only nu = 1.
inline double matern_cov(double d, double phi, double nu,
                         MaternScaling scaling = MaternScaling::range) {
  if (nu != 1.0) throw UnsupportedError("matern_cov: only nu = 1 is implemented");
  if (!(phi > 0.0)) throw InputError("matern_cov: phi must be positive");
  if (!(d >= 0.0)) throw InputError("matern_cov: distance must be nonnegative");
  if (d == 0.0) return 1.0;
  const double u = (scaling == MaternScaling::range ? 1.0 : std::sqrt(2.0 * nu)) * d / phi;
  if (u < 1e-300) return 1.0;
  return u * bessel_k1(u);
}

}  // namespace face
