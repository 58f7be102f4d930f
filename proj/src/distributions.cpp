#include "zabs/distributions.hpp"

#include <cmath>

#include "zabs/errors.hpp"
#include "zabs/normal.hpp"

namespace zabs {

namespace {
constexpr double kLog16Pi = 3.9173186080891814118;  // log(16*pi)
}

RbsParams::RbsParams(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::domain_error("RbsParams: mu must be positive");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::domain_error("RbsParams: sigma must be positive");
  }
}

ClassicalBsParams ClassicalBsParams::from_rbs(const RbsParams& p) {
  return {std::sqrt(2.0 / p.sigma), p.sigma * p.mu / (p.sigma + 1.0)};
}

RbsParams ClassicalBsParams::to_rbs() const {
  const double sigma = 2.0 / (alpha * alpha);
  return RbsParams(beta * (1.0 + 0.5 * alpha * alpha), sigma);
}

ZabsParams::ZabsParams(RbsParams rbs_, double nu_) : rbs(rbs_), nu(nu_) {
  if (!(nu >= 0.0 && nu < 1.0)) {
    throw std::domain_error("ZabsParams: nu must lie in [0,1)");
  }
}

double rbs_logpdf(double t, const RbsParams& p) {
  if (!(t > 0.0)) throw std::domain_error("rbs_logpdf: t must be positive");
  const double s = p.sigma;
  const double mu = p.mu;
  const double beta = s * mu / (s + 1.0);
  return 0.5 * s + 0.5 * std::log(s + 1.0) - 0.5 * kLog16Pi -
         0.5 * std::log(mu) - 1.5 * std::log(t) + std::log(t + beta) -
         (s + 1.0) * t / (4.0 * mu) - s * s * mu / (4.0 * (s + 1.0) * t);
}

double rbs_pdf(double t, const RbsParams& p) { return std::exp(rbs_logpdf(t, p)); }

double rbs_cdf(double t, const RbsParams& p) {
  if (!(t > 0.0)) throw std::domain_error("rbs_cdf: t must be positive");
  const auto cb = ClassicalBsParams::from_rbs(p);
  const double r = std::sqrt(t / cb.beta);
  return norm_cdf((r - 1.0 / r) / cb.alpha);
}

double rbs_quantile(double prob, const RbsParams& p) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::domain_error("rbs_quantile: p must lie in (0,1)");
  }
  const auto cb = ClassicalBsParams::from_rbs(p);
  const double az = cb.alpha * norm_quantile(prob);
  const double root = 0.5 * (az + std::sqrt(az * az + 4.0));
  return cb.beta * root * root;
}

double rbs_mean(const RbsParams& p) { return p.mu; }

double rbs_variance(const RbsParams& p) {
  const double s1 = p.sigma + 1.0;
  return p.mu * p.mu * (2.0 * p.sigma + 5.0) / (s1 * s1);
}

std::vector<double> rbs_sample(std::size_t n, const RbsParams& p,
                               RngStream& rng) {
  const auto cb = ClassicalBsParams::from_rbs(p);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double az = cb.alpha * rng.normal();
    const double root = 0.5 * (az + std::sqrt(az * az + 4.0));
    out[i] = cb.beta * root * root;
  }
  return out;
}

double zabs_logpdf(double y, const ZabsParams& p) {
  if (y < 0.0) throw std::domain_error("zabs_logpdf: y must be nonnegative");
  if (y == 0.0) {
    if (p.nu == 0.0) throw std::domain_error("zabs_logpdf: y = 0 has zero mass when nu = 0");
    return std::log(p.nu);
  }
  const double log1mnu = p.nu == 0.0 ? 0.0 : std::log1p(-p.nu);
  return log1mnu + rbs_logpdf(y, p.rbs);
}

double zabs_cdf(double y, const ZabsParams& p) {
  if (y < 0.0) throw std::domain_error("zabs_cdf: y must be nonnegative");
  if (y == 0.0) return p.nu;
  return p.nu + (1.0 - p.nu) * rbs_cdf(y, p.rbs);
}

std::pair<double, double> zabs_moments(const ZabsParams& p) {
  const double mu = p.rbs.mu;
  const double s1 = p.rbs.sigma + 1.0;
  const double cv2 = (2.0 * p.rbs.sigma + 5.0) / (s1 * s1);
  const double mean = (1.0 - p.nu) * mu;
  const double var = (1.0 - p.nu) * mu * mu * (p.nu + cv2);
  return {mean, var};
}

std::vector<double> zabs_sample(std::size_t n, const ZabsParams& p,
                                RngStream& rng) {
  const auto cb = ClassicalBsParams::from_rbs(p.rbs);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.nu > 0.0 && rng.bernoulli(p.nu)) {
      out[i] = 0.0;
      continue;
    }
    const double az = cb.alpha * rng.normal();
    const double root = 0.5 * (az + std::sqrt(az * az + 4.0));
    out[i] = cb.beta * root * root;
  }
  return out;
}

}  // namespace zabs
