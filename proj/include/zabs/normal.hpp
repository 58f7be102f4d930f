#pragma once

// Standard normal density, CDF, quantile and a Kolmogorov-Smirnov tail
// probability. The quantile is Wichura's PPND16 rational approximation,
// accurate to about 1e-15 over the full open interval.

#include <cmath>
#include <limits>

#include "zabs/errors.hpp"

namespace zabs {

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

// Accurate in both tails via erfc.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / kSqrt2);
}

inline double norm_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

// Wichura (1988), algorithm AS 241, PPND16.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw NumericError("norm_quantile: p must lie in (0,1)");
  }
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.76949722146069140550) * r +
            4.63033784615654529590) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580) * r +
            5.46378491116411436990) * r + 6.65790464350110377720) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

// P(K > lambda) for the Kolmogorov distribution, alternating series.
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::fmin(1.0, std::fmax(0.0, 2.0 * sum));
}

// Asymptotic p-value of the one-sample KS statistic d on n observations.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_tail(d * (sn + 0.12 + 0.11 / sn));
}

}  // namespace zabs
