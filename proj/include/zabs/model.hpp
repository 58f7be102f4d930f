#pragma once

// Data container and the three systematic components of the model: each of
// mean, precision and zero-probability is a link plus a linear or nonlinear
// function of covariates with parameter vector beta, alpha or gamma.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zabs/links.hpp"

namespace zabs {

struct Dataset {
  std::vector<std::string> columns;
  Eigen::MatrixXd cells;  // n x ncol
  int response = -1;

  int n() const { return static_cast<int>(cells.rows()); }
  int n_zero() const;
  Eigen::VectorXd y() const { return cells.col(response); }
  int column_index(const std::string& name) const;  // -1 when absent

  // Copy with the given 1-based rows removed.
  Dataset without_rows(const std::vector<int>& rows_1based) const;
};

enum class PredictorKind { Linear, ExpRatio, Custom };

// f(row; par) and its gradient with respect to par.
using CustomFn =
    std::function<double(std::span<const double> row, std::span<const double> par)>;
using CustomGradFn = std::function<void(std::span<const double> row,
                                        std::span<const double> par,
                                        std::span<double> grad)>;

struct PredictorSpec {
  PredictorKind kind = PredictorKind::Linear;
  std::vector<int> columns;  // covariate columns; ExpRatio uses exactly one
  bool intercept = true;     // Linear only
  int custom_n_params = 0;
  CustomFn fn;               // Custom only
  CustomGradFn grad_fn;      // optional analytic Jacobian for Custom

  static PredictorSpec linear(std::vector<int> cols, bool intercept = true);
  // eta = par[0] * exp(par[1] / x)
  static PredictorSpec exp_ratio(int col);
  static PredictorSpec custom(int n_params, CustomFn f,
                              CustomGradFn g = nullptr);

  int n_params() const;
  std::vector<std::string> param_names(const Dataset& data,
                                       const std::string& prefix) const;

  // Predictor values eta and the derivative matrix d(eta)/d(par).
  Eigen::VectorXd eval(const Dataset& data, const Eigen::VectorXd& par) const;
  Eigen::MatrixXd jacobian(const Dataset& data,
                           const Eigen::VectorXd& par) const;
  // sum_i s_i * d^2(eta_i)/d(par)d(par)^T; zero for linear predictors.
  Eigen::MatrixXd curvature(const Dataset& data, const Eigen::VectorXd& par,
                            const Eigen::VectorXd& s) const;
};

struct ComponentSpec {
  PredictorSpec predictor;
  Link link;
};

struct ModelSpec {
  int response_column = -1;
  ComponentSpec mean{PredictorSpec{}, Link(LinkKind::Log)};
  ComponentSpec precision{PredictorSpec{}, Link(LinkKind::Log)};
  std::optional<ComponentSpec> zeroprob;  // absent: nu identically 0

  int p() const { return mean.predictor.n_params(); }
  int q() const { return precision.predictor.n_params(); }
  int r() const { return zeroprob ? zeroprob->predictor.n_params() : 0; }
  int dim() const { return p() + q() + r(); }

  // Checks invariants against the data (zeros vs zeroprob part, parameter
  // counts, referenced columns). Throws DataError/ConfigError.
  void validate(const Dataset& data) const;

  std::vector<std::string> param_names(const Dataset& data) const;
  std::vector<std::string> param_blocks() const;  // "mean"/"precision"/"zeroprob" per entry
};

}  // namespace zabs
