#pragma once

// Randomized quantile residuals with simulated envelopes, and case-weights
// local influence (normal curvature C_i, maximal direction d_max) per
// parameter block and for the full parameter vector.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "zabs/estimation.hpp"

namespace zabs {

struct ResidualSet {
  Eigen::VectorXd r;              // quantile residuals
  Eigen::VectorXd cdf;            // model CDF at the observations
  std::uint64_t seed = 0;
  int clipped = 0;                // CDF values forced into [eps, 1-eps]
  Eigen::VectorXd mu, sigma, nu;  // fitted parameters the residuals used
};

struct EnvelopeBands {
  Eigen::VectorXd lower, median, upper;  // per rank
  Eigen::VectorXd observed;              // sorted observed residuals
  int replicates_used = 0;
  int replicates_failed = 0;
  double band = 0.95;
};

struct BlockInfluence {
  Eigen::VectorXd c;      // C_i = 2|F_ii|
  Eigen::VectorXd d_max;  // unit eigenvector, largest-magnitude entry positive
  double c_bar = 0.0;
  std::vector<int> flagged;  // 1-based indices with C_i > 2*C_bar
};

struct InfluenceReport {
  BlockInfluence beta, alpha, gamma, theta;
  bool ridge_used = false;  // near-singular Hessian stabilized
};

ResidualSet quantile_residuals(const ModelSpec& model, const Dataset& data,
                               const FitResult& fit, std::uint64_t seed);

EnvelopeBands simulated_envelope(const ModelSpec& model, const Dataset& data,
                                 const FitResult& fit, int replicates,
                                 double band, std::uint64_t seed);

// Per-observation score contributions at theta-hat: dim(theta) x n.
Eigen::MatrixXd case_weight_delta(const ModelSpec& model, const Dataset& data,
                                  const FitResult& fit);

InfluenceReport local_influence(const ModelSpec& model, const Dataset& data,
                                const FitResult& fit);

}  // namespace zabs
