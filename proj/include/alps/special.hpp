#pragma once

// Scaled modified-Bessel machinery for the ring prior, plus the exact
// chi-square CDF used by shell-mass computations. Ring experiments run at
// z = r/w^2 up to ~1e4 where I0 itself overflows, so everything works with
// ratios and logs: power series below z = 10, backward-recurrence ratios and
// the uniform asymptotic series above.

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "alps/common.hpp"

namespace alps {

// I1(z)/I0(z). Monotone from 0 to 1; relative accuracy ~1e-14 on both branches.
inline double bessel_i1_over_i0(double z) {
  require(z >= 0 && std::isfinite(z), "bessel_i1_over_i0: z must be finite and >= 0");
  if (z == 0) return 0.0;
  if (z < 10.0) {
    // Series for I0 and I1 share the term (z^2/4)^k / (k!)^2.
    const double q = 0.25 * z * z;
    double term = 1.0, s0 = 1.0, s1 = 1.0;  // s1 accumulates I1/(z/2)
    for (int k = 1; k < 64; ++k) {
      term *= q / (double(k) * double(k));
      s0 += term;
      s1 += term / double(k + 1);
      if (term < 1e-18 * s0) break;
    }
    return 0.5 * z * s1 / s0;
  }
  // Miller backward recurrence on r_nu = I_{nu+1}/I_nu:
  //   r_{nu} = 1 / (2(nu+1)/z + r_{nu+1}),  r_N = 0 at large N.
  int n = int(z + 40.0 * std::sqrt(z)) + 40;
  double r = 0.0;
  for (int nu = n; nu >= 0; --nu) r = 1.0 / (2.0 * double(nu + 1) / z + r);
  return r;
}

// log I0(z) without overflow. The series stays in range up to the switch
// point; past it the 12-term asymptotic expansion is converged to ~1e-14.
inline double log_bessel_i0(double z) {
  require(z >= 0 && std::isfinite(z), "log_bessel_i0: z must be finite and >= 0");
  if (z < 20.0) {
    const double q = 0.25 * z * z;
    double term = 1.0, s0 = 1.0;
    for (int k = 1; k < 128; ++k) {
      term *= q / (double(k) * double(k));
      s0 += term;
      if (term < 1e-18 * s0) break;
    }
    return std::log(s0);
  }
  // I0(z) = e^z / sqrt(2 pi z) * sum_k a_k / z^k, a_k = ((2k-1)!!)^2 / (8^k k!)
  double sum = 1.0, num = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    num *= odd * odd / (8.0 * double(k));
    const double t = num / std::pow(z, k);
    sum += t;
    if (t < 1e-18) break;
  }
  return z - 0.5 * std::log(6.283185307179586476925286766559 * z) + std::log(sum);
}

// d/dz [I1(z)/I0(z)] = (I0+I2)/(2 I0) - (I1/I0)^2; uses I2/I0 = 1 - (2/z) I1/I0.
// This is also Var(cos phi) for the von Mises law with concentration z.
inline double bessel_ratio_derivative(double z) {
  require(z >= 0 && std::isfinite(z), "bessel_ratio_derivative: z must be finite and >= 0");
  if (z == 0) return 0.5;
  const double r1 = bessel_i1_over_i0(z);
  if (z < 1e-4) {
    // (I0+I2)/(2I0) = 1/2 + z^2/16 + O(z^4); direct form cancels badly here.
    return 0.5 + z * z / 16.0 - r1 * r1;
  }
  const double i2_over_i0 = 1.0 - (2.0 / z) * r1;
  return 0.5 * (1.0 + i2_over_i0) - r1 * r1;
}

// P[chi^2_d <= x], exact via the regularized incomplete gamma function.
inline double chi_square_cdf(double x, double dof) {
  require(dof > 0, "chi_square_cdf: dof must be positive");
  if (x <= 0) return 0.0;
  return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

// Gaussian mass of the shell { | ||x||^2 - sigma^2 d | <= rho sigma^2 d },
// x ~ N(0, I_d). Exact chi-square mass, not the Chernoff bound.
inline double shell_mass(int d, double sigma_sq, double rho) {
  require(d > 0 && sigma_sq > 0 && rho > 0, "shell_mass: bad parameters");
  const double lo = (1.0 - rho) * sigma_sq * d;
  const double hi = (1.0 + rho) * sigma_sq * d;
  return chi_square_cdf(hi, d) - chi_square_cdf(lo, d);
}

}  // namespace alps
