#pragma once

// Shared helpers for the test suites: dataset construction, model
// simulation, finite differences.

#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "zabs/distributions.hpp"
#include "zabs/estimation.hpp"
#include "zabs/model.hpp"
#include "zabs/rng.hpp"

namespace zabs::test {

inline std::string source_dir() {
  const char* env = std::getenv("ZABS_SOURCE_DIR");
  return env ? env : ".";
}

inline std::string cli_path() {
  const char* env = std::getenv("ZABS_CLI");
  return env ? env : "./zabs";
}

inline Dataset make_dataset(const Eigen::MatrixXd& cells,
                            std::vector<std::string> columns, int response) {
  Dataset d;
  d.cells = cells;
  d.columns = std::move(columns);
  d.response = response;
  return d;
}

// Evaluates the fitted parameter triples for a model/theta pair the same
// way the estimator does (via predictors and inverse links).
struct ParamTriples {
  Eigen::VectorXd mu, sigma, nu;
};

inline ParamTriples triples(const ModelSpec& model, const Dataset& data,
                            const Eigen::VectorXd& theta) {
  ParamTriples out;
  const int p = model.p(), q = model.q(), r = model.r();
  const Eigen::VectorXd eta =
      model.mean.predictor.eval(data, theta.segment(0, p));
  const Eigen::VectorXd tau =
      model.precision.predictor.eval(data, theta.segment(p, q));
  out.mu.resize(data.n());
  out.sigma.resize(data.n());
  out.nu = Eigen::VectorXd::Zero(data.n());
  for (int i = 0; i < data.n(); ++i) {
    out.mu[i] = model.mean.link.inverse(eta[i]);
    out.sigma[i] = model.precision.link.inverse(tau[i]);
  }
  if (model.zeroprob) {
    const Eigen::VectorXd xi =
        model.zeroprob->predictor.eval(data, theta.segment(p + q, r));
    for (int i = 0; i < data.n(); ++i) {
      out.nu[i] = model.zeroprob->link.inverse(xi[i]);
    }
  }
  return out;
}

// Draws responses in place from the model at theta.
inline void simulate_responses(const ModelSpec& model, Dataset& data,
                               const Eigen::VectorXd& theta, RngStream& rng) {
  const ParamTriples t = triples(model, data, theta);
  for (int i = 0; i < data.n(); ++i) {
    const ZabsParams p(RbsParams(t.mu[i], t.sigma[i]),
                       model.zeroprob ? t.nu[i] : 0.0);
    double y;
    if (p.nu > 0.0 && rng.bernoulli(p.nu)) {
      y = 0.0;
    } else {
      const auto cb = ClassicalBsParams::from_rbs(p.rbs);
      const double az = cb.alpha * rng.normal();
      const double root = 0.5 * (az + std::sqrt(az * az + 4.0));
      y = cb.beta * root * root;
    }
    data.cells(i, model.response_column) = y;
  }
}

// The worked ZABS example used across the estimation and diagnostics
// suites: log-mean with two covariates, constant precision on the log
// scale, probit zero part with three covariates.
struct ZabsExample {
  Dataset data;
  ModelSpec model;
  Eigen::VectorXd theta_true;
};

inline ZabsExample make_zabs_example(int n, std::uint64_t seed,
                                     bool simulate = true) {
  RngStream rng(seed);
  Eigen::MatrixXd cells(n, 4);
  for (int i = 0; i < n; ++i) {
    cells(i, 0) = 0.0;                      // y, filled below
    cells(i, 1) = rng.uniform(50.0, 130.0); // x1
    cells(i, 2) = rng.uniform(15.0, 35.0);  // x2
    cells(i, 3) = rng.uniform(0.0, 4.0);    // x3
  }
  ZabsExample ex{make_dataset(cells, {"y", "x1", "x2", "x3"}, 0), {}, {}};
  ex.model.response_column = 0;
  ex.model.mean = ComponentSpec{PredictorSpec::linear({1, 2}), Link(LinkKind::Log)};
  ex.model.precision =
      ComponentSpec{PredictorSpec::linear({}), Link(LinkKind::Log)};
  ex.model.zeroprob =
      ComponentSpec{PredictorSpec::linear({1, 2, 3}), Link(LinkKind::Probit)};
  ex.theta_true.resize(ex.model.dim());
  ex.theta_true << -4.726, 0.015, 0.057,  // log mu
      std::log(1.127),                    // log sigma
      1.934, -0.014, -0.030, 0.096;       // probit nu
  if (simulate) {
    RngStream resp(seed ^ 0xABCDEF1234567890ULL);
    simulate_responses(ex.model, ex.data, ex.theta_true, resp);
  }
  return ex;
}

// Clean low-noise positive-part example for the influence checks: log-mean
// with one covariate, constant high precision, no zeros.
inline ZabsExample make_clean_example(int n, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd cells(n, 2);
  for (int i = 0; i < n; ++i) {
    cells(i, 0) = 0.0;
    cells(i, 1) = rng.uniform(-1.0, 1.0);
  }
  ZabsExample ex{make_dataset(cells, {"y", "x"}, 0), {}, {}};
  ex.model.response_column = 0;
  ex.model.mean = ComponentSpec{PredictorSpec::linear({1}), Link(LinkKind::Log)};
  ex.model.precision =
      ComponentSpec{PredictorSpec::linear({}), Link(LinkKind::Log)};
  ex.theta_true.resize(3);
  ex.theta_true << 0.5, 0.8, std::log(8.0);
  RngStream resp(seed ^ 0x9E3779B97F4A7C15ULL);
  simulate_responses(ex.model, ex.data, ex.theta_true, resp);
  return ex;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& theta) {
  const double c0 = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd tp = theta, tm = theta;
  for (int k = 0; k < theta.size(); ++k) {
    const double h = c0 * (std::fabs(theta[k]) + 1.0);
    tp[k] = theta[k] + h;
    tm[k] = theta[k] - h;
    g[k] = (f(tp) - f(tm)) / (2.0 * h);
    tp[k] = theta[k];
    tm[k] = theta[k];
  }
  return g;
}

// One-sample KS statistic against a CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs((i + 1.0) / n - f));
    d = std::max(d, std::fabs(f - i / n));
  }
  return d;
}

}  // namespace zabs::test
