#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "zabs/distributions.hpp"
#include "zabs/normal.hpp"
#include "zabs/quadrature.hpp"

using namespace zabs;

namespace {

// Oracle: the classical two-parameter density written from its own
// formula, independent of the mean/precision code path.
double classical_bs_pdf(double t, double alpha, double beta) {
  const double a = std::sqrt(beta / t);
  const double term = a + a * a * a;
  const double z = (t / beta + beta / t - 2.0) / (2.0 * alpha * alpha);
  return term * std::exp(-z) / (2.0 * alpha * beta * std::sqrt(2.0 * M_PI));
}

double quad_pdf_mass(const RbsParams& p, double upper = -1.0) {
  auto f = [&](double t) { return std::exp(rbs_logpdf(t, p)); };
  if (upper > 0.0) return integrate(f, 1e-300, upper, 1e-12).value;
  return integrate_half_line(f, 1e-12).value;
}

}  // namespace

TEST_CASE("density matches the classical parameterization") {
  RngStream rng(101);
  for (int k = 0; k < 20; ++k) {
    const double mu = std::exp(rng.uniform(-1.5, 3.0));
    const double sigma = std::exp(rng.uniform(-1.0, 3.0));
    const RbsParams p(mu, sigma);
    const auto cb = ClassicalBsParams::from_rbs(p);
    CHECK(cb.alpha == doctest::Approx(std::sqrt(2.0 / sigma)).epsilon(1e-14));
    CHECK(cb.beta ==
          doctest::Approx(sigma * mu / (sigma + 1.0)).epsilon(1e-14));
    const double t = rbs_quantile(rng.uniform(0.02, 0.98), p);
    const double oracle = classical_bs_pdf(t, cb.alpha, cb.beta);
    CHECK(std::exp(rbs_logpdf(t, p)) == doctest::Approx(oracle).epsilon(1e-11));
  }
}

TEST_CASE("density normalizes to one") {
  CHECK(quad_pdf_mass(RbsParams(2.0, 3.0)) == doctest::Approx(1.0).epsilon(1e-8));

  RngStream rng(102);
  for (int k = 0; k < 50; ++k) {
    const double mu = std::exp(rng.uniform(-1.0, 2.5));
    const double sigma = std::exp(rng.uniform(-1.0, 3.0));
    const double nu = rng.uniform(0.05, 0.9);
    const double mass = nu + (1.0 - nu) * quad_pdf_mass(RbsParams(mu, sigma));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("quadrature of t*pdf recovers the mean") {
  RngStream rng(103);
  for (int k = 0; k < 10; ++k) {
    const double mu = std::exp(rng.uniform(-1.0, 2.0));
    const double sigma = std::exp(rng.uniform(-0.5, 2.5));
    const RbsParams p(mu, sigma);
    auto f = [&](double t) { return t * std::exp(rbs_logpdf(t, p)); };
    const double m = integrate_half_line(f, 1e-10).value;
    CHECK(m == doctest::Approx(mu).epsilon(1e-6));
  }
}

TEST_CASE("density is unimodal") {
  const RbsParams p(2.5, 1.7);
  const int grid = 400;
  int sign_changes = 0;
  double prev = 0.0;
  bool have_prev = false;
  for (int i = 0; i + 1 < grid; ++i) {
    const double lo = std::log(1e-6);
    const double hi = std::log(100.0 * p.mu);
    const double t0 = std::exp(lo + (hi - lo) * i / (grid - 1.0));
    const double t1 = std::exp(lo + (hi - lo) * (i + 1) / (grid - 1.0));
    const double diff = rbs_logpdf(t1, p) - rbs_logpdf(t0, p);
    if (have_prev && (diff < 0.0) != (prev < 0.0)) ++sign_changes;
    prev = diff;
    have_prev = true;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("cdf properties and quantile round trip") {
  const RbsParams p(2.0, 3.0);
  const double median = p.sigma * p.mu / (p.sigma + 1.0);
  CHECK(rbs_cdf(median, p) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rbs_quantile(0.5, p) == doctest::Approx(median).epsilon(1e-14));

  for (double prob : {0.01, 0.5, 0.99}) {
    CHECK(rbs_cdf(rbs_quantile(prob, p), p) ==
          doctest::Approx(prob).epsilon(1e-10));
  }

  // Strictly increasing across the percentile grid.
  double prev = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double qk = rbs_quantile(k / 100.0, p);
    CHECK(qk > prev);
    prev = qk;
  }

  RngStream rng(104);
  for (int k = 0; k < 12; ++k) {
    const RbsParams pr(std::exp(rng.uniform(-1.0, 2.0)),
                       std::exp(rng.uniform(-0.5, 2.5)));
    for (double prob : {0.001, 0.1, 0.37, 0.5, 0.9, 0.999}) {
      CHECK(rbs_cdf(rbs_quantile(prob, pr), pr) ==
            doctest::Approx(prob).epsilon(1e-10));
    }
  }
}

TEST_CASE("quantile agrees with bisection on the cdf") {
  const RbsParams p(1.0, 2.0);
  const double target = 0.9;
  double lo = 1e-9, hi = 1e9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rbs_cdf(mid, p) < target ? lo : hi) = mid;
  }
  CHECK(rbs_quantile(target, p) ==
        doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
}

TEST_CASE("cdf equals the integral of the density") {
  const RbsParams p(1.4, 2.2);
  RngStream rng(105);
  for (int k = 0; k < 10; ++k) {
    const double t = rbs_quantile(rng.uniform(0.05, 0.95), p);
    CHECK(quad_pdf_mass(p, t) == doctest::Approx(rbs_cdf(t, p)).epsilon(1e-8));
  }
}

TEST_CASE("sampling: moments, determinism, support, KS") {
  const RbsParams p(5.0, 4.0);
  RngStream rng(106);
  const std::size_t n = 1000000;
  const auto sample = rbs_sample(n, p, rng);

  double mean = 0.0;
  for (double v : sample) {
    CHECK(v > 0.0);
    mean += v;
  }
  mean /= n;
  const double se = std::sqrt(rbs_variance(p) / n);
  CHECK(std::fabs(mean - p.mu) < 3.0 * se);

  double var = 0.0;
  for (double v : sample) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  CHECK(var == doctest::Approx(rbs_variance(p)).epsilon(0.02));

  RngStream r1(42), r2(42);
  CHECK(rbs_sample(16, p, r1) == rbs_sample(16, p, r2));

  // KS distance below the 1% critical value on 1e5 draws.
  RngStream r3(107);
  const auto ks_sample = rbs_sample(100000, p, r3);
  const double d =
      test::ks_statistic({ks_sample.begin(), ks_sample.end()},
                         [&](double t) { return rbs_cdf(t, p); });
  CHECK(d < 1.6276 / std::sqrt(100000.0));
}

TEST_CASE("zero-adjusted density and cdf") {
  const ZabsParams p(2.0, 3.0, 0.3);
  CHECK(zabs_logpdf(0.0, p) == doctest::Approx(std::log(0.3)).epsilon(1e-14));

  const ZabsParams pure(2.0, 3.0, 0.0);
  CHECK(zabs_logpdf(1.7, pure) ==
        doctest::Approx(rbs_logpdf(1.7, pure.rbs)).epsilon(1e-14));
  CHECK_THROWS_AS(zabs_logpdf(0.0, pure), std::domain_error);
  CHECK_THROWS_AS(zabs_logpdf(-1.0, p), std::domain_error);

  const ZabsParams pc(2.0, 3.0, 0.25);
  CHECK(zabs_cdf(0.0, pc) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(zabs_cdf(rbs_quantile(1.0 - 1e-13, pc.rbs), pc) ==
        doctest::Approx(1.0).epsilon(1e-9));
  const ZabsParams p2(2.0, 3.0, 0.2);
  const double med = p2.rbs.sigma * p2.rbs.mu / (p2.rbs.sigma + 1.0);
  CHECK(zabs_cdf(med, p2) == doctest::Approx(0.2 + 0.8 * 0.5).epsilon(1e-12));
}

TEST_CASE("mixture moments") {
  {
    const auto [mean, var] = zabs_moments(ZabsParams(10.0, 2.0, 0.2));
    CHECK(mean == doctest::Approx(8.0).epsilon(1e-14));
    (void)var;
  }
  {
    const ZabsParams p(3.0, 2.0, 0.0);
    const auto [mean, var] = zabs_moments(p);
    CHECK(mean == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(var == doctest::Approx(rbs_variance(p.rbs)).epsilon(1e-14));
  }
  {
    // Monte Carlo check of the mixture variance.
    const ZabsParams p(3.0, 2.0, 0.4);
    RngStream rng(108);
    const std::size_t n = 1000000;
    const auto sample = zabs_sample(n, p, rng);
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : sample) {
      const double d = v - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    const double se_var = std::sqrt((m4 - m2 * m2) / n);
    const auto [emean, evar] = zabs_moments(p);
    CHECK(std::fabs(mean - emean) < 3.0 * std::sqrt(m2 / n));
    CHECK(std::fabs(m2 * n / (n - 1.0) - evar) < 3.0 * se_var);
  }
}

TEST_CASE("mixture sampling: zero fraction, degenerate case, determinism") {
  const ZabsParams p(2.0, 3.0, 0.3);
  RngStream rng(109);
  const std::size_t n = 1000000;
  const auto sample = zabs_sample(n, p, rng);
  std::size_t zeros = 0;
  for (double v : sample) zeros += v == 0.0 ? 1 : 0;
  const double se = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::fabs(zeros / static_cast<double>(n) - 0.3) < 3.0 * se);

  const ZabsParams pure(2.0, 3.0, 0.0);
  RngStream r0(110);
  for (double v : zabs_sample(1000, pure, r0)) CHECK(v > 0.0);

  RngStream r1(7), r2(7);
  CHECK(zabs_sample(16, p, r1) == zabs_sample(16, p, r2));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(RbsParams(-1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(RbsParams(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(ZabsParams(1.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(rbs_logpdf(0.0, RbsParams(1.0, 1.0)), std::domain_error);
  CHECK_THROWS_AS(rbs_quantile(1.0, RbsParams(1.0, 1.0)), std::domain_error);
  CHECK_NOTHROW(ZabsParams(1.0, 1.0, 0.0));  // degenerate mixture is allowed
}
