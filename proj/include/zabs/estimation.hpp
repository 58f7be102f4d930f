#pragma once

// Log-likelihood, analytic score, Hessian, expected Fisher information and
// the Fisher-scoring fitter for the zero-adjusted model. The parameter
// vector is packed [beta | alpha | gamma] for the mean, precision and
// zero-probability parts.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "zabs/errors.hpp"
#include "zabs/model.hpp"

namespace zabs {

struct FitOptions {
  int max_iter = 200;
  double tol_score = 1e-6;
  double tol_loglik_rel = 1e-10;
  int max_step_halvings = 30;
  double lambda_rel_tol = 1e-9;
  bool warm_start = false;  // take theta0 below as the starting point
  Eigen::VectorXd theta0;
};

struct IterationRecord {
  int iter;
  double loglik;
  double step;  // accepted step scale
  Eigen::VectorXd theta;
};

struct FitResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd inverse_information;
  double loglik = 0.0;
  double aic = 0.0;
  int n = 0;
  int n0 = 0;
  int p = 0, q = 0, r = 0;
  bool converged = false;
  int iterations = 0;
  double score_max_abs = 0.0;
  std::vector<IterationRecord> trace;
  std::vector<std::string> warnings;
  std::vector<std::string> param_names;
  std::vector<std::string> param_blocks;
  Eigen::VectorXd mu, sigma, nu;  // fitted per-observation parameters

  Eigen::VectorXd beta() const { return theta.segment(0, p); }
  Eigen::VectorXd alpha() const { return theta.segment(p, q); }
  Eigen::VectorXd gamma() const { return theta.segment(p + q, r); }
};

// Thrown by fit() after the iteration budget runs out; carries the partial
// result so callers can still write the trace.
class FitNonConvergence : public NonConvergence {
 public:
  FitNonConvergence(const std::string& msg, FitResult partial)
      : NonConvergence(msg), partial_result(std::move(partial)) {}
  FitResult partial_result;
};

struct InferenceRow {
  std::string block;
  std::string name;
  double estimate;
  double se;
  double z;
  double p_value;
  double ci_lo;
  double ci_hi;
};

// Per-observation pieces of the score at a given theta, used by the
// influence diagnostics: column i of the Delta matrix is
// [a_i*dmu_i*x_i ; b_i*dsigma_i*z_i ; c_i*dnu_i*w_i].
struct ObsComponents {
  Eigen::VectorXd mu, sigma, nu;
  Eigen::VectorXd dmu, dsigma, dnu;  // d loglik_i / d (mu_i, sigma_i, nu_i)
  Eigen::VectorXd a, b, c;           // 1/g' weights
  Eigen::MatrixXd X, Z, W;           // predictor derivative matrices
};

// E[(T + sigma*mu/(sigma+1))^-2] for T ~ RBS(mu, sigma), by adaptive
// quadrature over (0,inf). Feeds the expected-information weights.
double lambda_integral(double mu, double sigma, double rel_tol = 1e-9);

double loglik(const ModelSpec& model, const Dataset& data,
              const Eigen::VectorXd& theta);
Eigen::VectorXd score(const ModelSpec& model, const Dataset& data,
                      const Eigen::VectorXd& theta);
Eigen::MatrixXd hessian(const ModelSpec& model, const Dataset& data,
                        const Eigen::VectorXd& theta);
Eigen::MatrixXd fisher_information(const ModelSpec& model, const Dataset& data,
                                   const Eigen::VectorXd& theta,
                                   double lambda_rel_tol = 1e-9);
ObsComponents observation_components(const ModelSpec& model,
                                     const Dataset& data,
                                     const Eigen::VectorXd& theta);

FitResult fit(const ModelSpec& model, const Dataset& data,
              const FitOptions& options = {});

std::vector<InferenceRow> wald_inference(const FitResult& fit,
                                         double level = 0.95);

}  // namespace zabs
