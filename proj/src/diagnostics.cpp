#include "zabs/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "zabs/distributions.hpp"
#include "zabs/errors.hpp"
#include "zabs/normal.hpp"

namespace zabs {

namespace {

constexpr double kCdfClip = 1e-12;

Eigen::VectorXd sorted(const Eigen::VectorXd& v) {
  Eigen::VectorXd s = v;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

// C_i and d_max from F = Delta^T (-H)^{-1} Delta restricted to the rows of
// one parameter block. -H is positive definite at an interior maximum, so
// F is symmetric PSD and C_i = 2 F_ii reproduces the curvature with the
// absolute value already resolved.
BlockInfluence block_influence(const Eigen::MatrixXd& delta,
                               const Eigen::MatrixXd& neg_hessian_block,
                               bool* ridge_used) {
  const int n = static_cast<int>(delta.cols());
  BlockInfluence out;

  Eigen::MatrixXd nh = neg_hessian_block;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(nh);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> probe(nh);
  if (probe.eigenvalues().minCoeff() <= 1e-12 * nh.trace()) {
    // Ridge fallback, reported to the caller.
    const double tau = 1e-8 * nh.trace() / nh.rows();
    nh += tau * Eigen::MatrixXd::Identity(nh.rows(), nh.cols());
    ldlt.compute(nh);
    if (ridge_used) *ridge_used = true;
  }
  const Eigen::MatrixXd solved = ldlt.solve(delta);  // (-H)^{-1} Delta
  Eigen::MatrixXd f = delta.transpose() * solved;
  f = 0.5 * (f + f.transpose()).eval();  // kill round-off asymmetry

  out.c = 2.0 * f.diagonal().cwiseAbs();
  out.c_bar = out.c.mean();
  for (int i = 0; i < n; ++i) {
    if (out.c[i] > 2.0 * out.c_bar) out.flagged.push_back(i + 1);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
  // Largest-magnitude eigenvalue of the PSD matrix is the last one.
  Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  int imax = 0;
  for (int i = 1; i < n; ++i) {
    if (std::fabs(v[i]) > std::fabs(v[imax])) imax = i;
  }
  if (v[imax] < 0.0) v = -v;
  out.d_max = v / v.norm();
  return out;
}

}  // namespace

ResidualSet quantile_residuals(const ModelSpec& model, const Dataset& data,
                               const FitResult& fit, std::uint64_t seed) {
  if (!fit.converged) {
    throw NonConvergence("quantile_residuals: fit did not converge");
  }
  if (fit.mu.size() != data.n()) {
    throw DataError("quantile_residuals: fit artifact covers " +
                    std::to_string(fit.mu.size()) + " observations, data has " +
                    std::to_string(data.n()));
  }
  const Eigen::VectorXd y = data.cells.col(model.response_column);
  const int n = data.n();
  ResidualSet out;
  out.seed = seed;
  out.r.resize(n);
  out.cdf.resize(n);
  out.mu = fit.mu;
  out.sigma = fit.sigma;
  out.nu = fit.nu;
  RngStream rng(seed);
  for (int i = 0; i < n; ++i) {
    double u;
    if (y[i] > 0.0) {
      const ZabsParams p(RbsParams(fit.mu[i], fit.sigma[i]), fit.nu[i]);
      u = zabs_cdf(y[i], p);
    } else {
      u = rng.uniform() * fit.nu[i];  // U(0, nu_i)
    }
    if (u < kCdfClip) {
      u = kCdfClip;
      ++out.clipped;
    } else if (u > 1.0 - kCdfClip) {
      u = 1.0 - kCdfClip;
      ++out.clipped;
    }
    out.cdf[i] = u;
    out.r[i] = norm_quantile(u);
  }
  return out;
}

EnvelopeBands simulated_envelope(const ModelSpec& model, const Dataset& data,
                                 const FitResult& fit, int replicates,
                                 double band, std::uint64_t seed) {
  if (!fit.converged) {
    throw NonConvergence("simulated_envelope: fit did not converge");
  }
  if (replicates < 19) {
    throw ConfigError("simulated_envelope: need at least 19 replicates");
  }
  const int n = data.n();
  EnvelopeBands out;
  out.band = band;
  out.observed = sorted(quantile_residuals(model, data, fit, seed).r);

  std::vector<Eigen::VectorXd> rows;
  rows.reserve(replicates);
  Dataset sim = data;
  FitOptions warm;
  warm.warm_start = true;
  warm.theta0 = fit.theta;
  for (int rep = 0; rep < replicates; ++rep) {
    // Stream ids keep replicates independent of scheduling.
    RngStream rng(seed, static_cast<std::uint64_t>(rep) + 1);
    for (int i = 0; i < n; ++i) {
      const ZabsParams p(RbsParams(fit.mu[i], fit.sigma[i]), fit.nu[i]);
      double yi;
      if (p.nu > 0.0 && rng.bernoulli(p.nu)) {
        yi = 0.0;
      } else {
        const auto cb = ClassicalBsParams::from_rbs(p.rbs);
        const double az = cb.alpha * rng.normal();
        const double root = 0.5 * (az + std::sqrt(az * az + 4.0));
        yi = cb.beta * root * root;
      }
      sim.cells(i, model.response_column) = yi;
    }
    try {
      const FitResult refit = ::zabs::fit(model, sim, warm);
      rows.push_back(
          sorted(quantile_residuals(model, sim, refit,
                                    seed ^ (0x5851F42D4C957F2DULL +
                                            static_cast<std::uint64_t>(rep)))
                     .r));
    } catch (const std::exception&) {
      ++out.replicates_failed;
    }
  }
  if (out.replicates_failed * 10 > replicates) {
    throw NumericError("simulated_envelope: more than 10% of replicate refits failed (" +
                       std::to_string(out.replicates_failed) + "/" +
                       std::to_string(replicates) + ")");
  }
  out.replicates_used = static_cast<int>(rows.size());

  const double lo_q = 0.5 * (1.0 - band);
  const double hi_q = 1.0 - lo_q;
  out.lower.resize(n);
  out.median.resize(n);
  out.upper.resize(n);
  std::vector<double> column(rows.size());
  auto quantile_of = [&](double prob) {
    // Type-7 empirical quantile on the sorted column.
    const double h = prob * (static_cast<double>(column.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, column.size() - 1);
    return column[lo] + (h - std::floor(h)) * (column[hi] - column[lo]);
  };
  for (int i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < rows.size(); ++r) column[r] = rows[r][i];
    std::sort(column.begin(), column.end());
    out.lower[i] = quantile_of(lo_q);
    out.median[i] = quantile_of(0.5);
    out.upper[i] = quantile_of(hi_q);
  }
  return out;
}

Eigen::MatrixXd case_weight_delta(const ModelSpec& model, const Dataset& data,
                                  const FitResult& fit) {
  if (!fit.converged) {
    throw NonConvergence("case_weight_delta: fit did not converge");
  }
  const ObsComponents oc = observation_components(model, data, fit.theta);
  const int n = data.n();
  const int dim = fit.p + fit.q + fit.r;
  Eigen::MatrixXd delta(dim, n);
  for (int i = 0; i < n; ++i) {
    delta.col(i).segment(0, fit.p) =
        oc.X.row(i).transpose() * (oc.a[i] * oc.dmu[i]);
    delta.col(i).segment(fit.p, fit.q) =
        oc.Z.row(i).transpose() * (oc.b[i] * oc.dsigma[i]);
    if (fit.r > 0) {
      delta.col(i).segment(fit.p + fit.q, fit.r) =
          oc.W.row(i).transpose() * (oc.c[i] * oc.dnu[i]);
    }
  }
  return delta;
}

InfluenceReport local_influence(const ModelSpec& model, const Dataset& data,
                                const FitResult& fit) {
  const Eigen::MatrixXd delta = case_weight_delta(model, data, fit);
  const Eigen::MatrixXd neg_h = -hessian(model, data, fit.theta);
  const int p = fit.p, q = fit.q, r = fit.r;

  InfluenceReport report;
  report.beta = block_influence(delta.topRows(p), neg_h.topLeftCorner(p, p),
                                &report.ridge_used);
  report.alpha = block_influence(delta.middleRows(p, q),
                                 neg_h.block(p, p, q, q), &report.ridge_used);
  if (r > 0) {
    report.gamma =
        block_influence(delta.bottomRows(r),
                        neg_h.block(p + q, p + q, r, r), &report.ridge_used);
  }
  report.theta = block_influence(delta, neg_h, &report.ridge_used);
  return report;
}

}  // namespace zabs
