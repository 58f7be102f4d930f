#pragma once

// Birnbaum-Saunders distribution indexed by its mean mu and a precision
// parameter sigma (the "RBS" form), and its zero-adjusted mixture with a
// point mass nu at the origin. Densities are computed in log space; CDF,
// quantile and sampling go through the classical (shape alpha, scale beta)
// parameterization, for which closed forms exist.

#include <cstdint>
#include <utility>
#include <vector>

#include "zabs/rng.hpp"

namespace zabs {

struct RbsParams {
  double mu;     // mean, > 0
  double sigma;  // precision, > 0

  RbsParams(double mu_, double sigma_);
};

// alpha = sqrt(2/sigma), beta = sigma*mu/(sigma+1); the scale beta is also
// the median.
struct ClassicalBsParams {
  double alpha;
  double beta;

  static ClassicalBsParams from_rbs(const RbsParams& p);
  RbsParams to_rbs() const;
};

struct ZabsParams {
  RbsParams rbs;
  double nu;  // P(Y = 0); nu = 0 degenerates to the pure positive model

  ZabsParams(RbsParams rbs_, double nu_);
  ZabsParams(double mu_, double sigma_, double nu_)
      : ZabsParams(RbsParams(mu_, sigma_), nu_) {}
};

double rbs_logpdf(double t, const RbsParams& p);
double rbs_pdf(double t, const RbsParams& p);
double rbs_cdf(double t, const RbsParams& p);
double rbs_quantile(double prob, const RbsParams& p);
double rbs_mean(const RbsParams& p);
double rbs_variance(const RbsParams& p);
std::vector<double> rbs_sample(std::size_t n, const RbsParams& p,
                               RngStream& rng);

double zabs_logpdf(double y, const ZabsParams& p);
double zabs_cdf(double y, const ZabsParams& p);
// (mean, variance) of the mixture.
std::pair<double, double> zabs_moments(const ZabsParams& p);
std::vector<double> zabs_sample(std::size_t n, const ZabsParams& p,
                                RngStream& rng);

}  // namespace zabs
