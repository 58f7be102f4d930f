#include "zabs/model.hpp"

#include <cmath>
#include <limits>

#include "zabs/errors.hpp"

namespace zabs {

int Dataset::n_zero() const {
  int k = 0;
  for (int i = 0; i < n(); ++i) {
    if (cells(i, response) == 0.0) ++k;
  }
  return k;
}

int Dataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == name) return static_cast<int>(j);
  }
  return -1;
}

Dataset Dataset::without_rows(const std::vector<int>& rows_1based) const {
  std::vector<bool> drop(n(), false);
  for (int r : rows_1based) {
    if (r < 1 || r > n()) {
      throw DataError("row index " + std::to_string(r) + " outside 1.." +
                      std::to_string(n()));
    }
    drop[r - 1] = true;
  }
  Dataset out;
  out.columns = columns;
  out.response = response;
  int kept = 0;
  for (int i = 0; i < n(); ++i) kept += drop[i] ? 0 : 1;
  if (kept == 0) throw DataError("no observations left after removal");
  out.cells.resize(kept, cells.cols());
  int k = 0;
  for (int i = 0; i < n(); ++i) {
    if (!drop[i]) out.cells.row(k++) = cells.row(i);
  }
  return out;
}

PredictorSpec PredictorSpec::linear(std::vector<int> cols, bool intercept) {
  PredictorSpec s;
  s.kind = PredictorKind::Linear;
  s.columns = std::move(cols);
  s.intercept = intercept;
  return s;
}

PredictorSpec PredictorSpec::exp_ratio(int col) {
  PredictorSpec s;
  s.kind = PredictorKind::ExpRatio;
  s.columns = {col};
  return s;
}

PredictorSpec PredictorSpec::custom(int n_params, CustomFn f, CustomGradFn g) {
  PredictorSpec s;
  s.kind = PredictorKind::Custom;
  s.custom_n_params = n_params;
  s.fn = std::move(f);
  s.grad_fn = std::move(g);
  return s;
}

int PredictorSpec::n_params() const {
  switch (kind) {
    case PredictorKind::Linear:
      return static_cast<int>(columns.size()) + (intercept ? 1 : 0);
    case PredictorKind::ExpRatio:
      return 2;
    case PredictorKind::Custom:
      return custom_n_params;
  }
  return 0;
}

std::vector<std::string> PredictorSpec::param_names(
    const Dataset& data, const std::string& prefix) const {
  std::vector<std::string> names;
  switch (kind) {
    case PredictorKind::Linear:
      if (intercept) names.push_back(prefix + "(Intercept)");
      for (int c : columns) names.push_back(prefix + data.columns[c]);
      break;
    case PredictorKind::ExpRatio:
      names.push_back(prefix + "b1");
      names.push_back(prefix + "b2");
      break;
    case PredictorKind::Custom:
      for (int k = 0; k < custom_n_params; ++k) {
        names.push_back(prefix + "p" + std::to_string(k + 1));
      }
      break;
  }
  return names;
}

Eigen::VectorXd PredictorSpec::eval(const Dataset& data,
                                    const Eigen::VectorXd& par) const {
  const int n = data.n();
  Eigen::VectorXd eta(n);
  switch (kind) {
    case PredictorKind::Linear: {
      eta.setZero();
      int k = 0;
      if (intercept) {
        eta.array() += par[k];
        ++k;
      }
      for (int c : columns) eta += par[k++] * data.cells.col(c);
      break;
    }
    case PredictorKind::ExpRatio: {
      const auto x = data.cells.col(columns[0]);
      for (int i = 0; i < n; ++i) eta[i] = par[0] * std::exp(par[1] / x[i]);
      break;
    }
    case PredictorKind::Custom: {
      // Eigen rows are not contiguous in column-major storage; copy.
      Eigen::RowVectorXd rowv(data.cells.cols());
      for (int i = 0; i < n; ++i) {
        rowv = data.cells.row(i);
        eta[i] = fn(std::span<const double>(rowv.data(), rowv.size()),
                    std::span<const double>(par.data(), par.size()));
      }
      break;
    }
  }
  return eta;
}

Eigen::MatrixXd PredictorSpec::jacobian(const Dataset& data,
                                        const Eigen::VectorXd& par) const {
  const int n = data.n();
  const int k = n_params();
  Eigen::MatrixXd J(n, k);
  switch (kind) {
    case PredictorKind::Linear: {
      int j = 0;
      if (intercept) J.col(j++).setOnes();
      for (int c : columns) J.col(j++) = data.cells.col(c);
      break;
    }
    case PredictorKind::ExpRatio: {
      const auto x = data.cells.col(columns[0]);
      for (int i = 0; i < n; ++i) {
        const double e = std::exp(par[1] / x[i]);
        J(i, 0) = e;
        J(i, 1) = par[0] * e / x[i];
      }
      break;
    }
    case PredictorKind::Custom: {
      if (grad_fn) {
        Eigen::RowVectorXd rowv(data.cells.cols());
        Eigen::VectorXd grad(k);
        for (int i = 0; i < n; ++i) {
          rowv = data.cells.row(i);
          grad_fn(std::span<const double>(rowv.data(), rowv.size()),
                  std::span<const double>(par.data(), par.size()),
                  std::span<double>(grad.data(), grad.size()));
          J.row(i) = grad.transpose();
        }
      } else {
        // Central differences, h_k = eps^(1/3) * (|par_k| + 1).
        const double c0 = std::cbrt(std::numeric_limits<double>::epsilon());
        Eigen::VectorXd pp = par, pm = par;
        for (int j = 0; j < k; ++j) {
          const double h = c0 * (std::fabs(par[j]) + 1.0);
          pp[j] = par[j] + h;
          pm[j] = par[j] - h;
          J.col(j) = (eval(data, pp) - eval(data, pm)) / (2.0 * h);
          pp[j] = par[j];
          pm[j] = par[j];
        }
      }
      break;
    }
  }
  return J;
}

Eigen::MatrixXd PredictorSpec::curvature(const Dataset& data,
                                         const Eigen::VectorXd& par,
                                         const Eigen::VectorXd& s) const {
  const int k = n_params();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
  switch (kind) {
    case PredictorKind::Linear:
      break;
    case PredictorKind::ExpRatio: {
      const auto x = data.cells.col(columns[0]);
      for (int i = 0; i < data.n(); ++i) {
        const double e = std::exp(par[1] / x[i]);
        const double exi = e / x[i];
        H(0, 1) += s[i] * exi;
        H(1, 1) += s[i] * par[0] * exi / x[i];
      }
      H(1, 0) = H(0, 1);
      break;
    }
    case PredictorKind::Custom: {
      // Differentiate the Jacobian columns once more.
      const double c0 = std::cbrt(std::numeric_limits<double>::epsilon());
      Eigen::VectorXd pp = par, pm = par;
      for (int j = 0; j < k; ++j) {
        const double h = c0 * (std::fabs(par[j]) + 1.0);
        pp[j] = par[j] + h;
        pm[j] = par[j] - h;
        Eigen::MatrixXd Jp = jacobian(data, pp);
        Eigen::MatrixXd Jm = jacobian(data, pm);
        H.col(j) = (Jp - Jm).transpose() * s / (2.0 * h);
        pp[j] = par[j];
        pm[j] = par[j];
      }
      H = 0.5 * (H + H.transpose()).eval();
      break;
    }
  }
  return H;
}

void ModelSpec::validate(const Dataset& data) const {
  if (response_column < 0 || response_column >= data.cells.cols()) {
    throw ConfigError("response column not set or out of range");
  }
  const Eigen::VectorXd y = data.cells.col(response_column);
  for (int i = 0; i < data.n(); ++i) {
    if (!(y[i] >= 0.0) || !std::isfinite(y[i])) {
      throw DataError("response must be finite and nonnegative (row " +
                      std::to_string(i + 1) + ")");
    }
  }
  int n0 = 0;
  for (int i = 0; i < data.n(); ++i) n0 += y[i] == 0.0 ? 1 : 0;
  if (n0 > 0 && !zeroprob) {
    throw DataError("data contain " + std::to_string(n0) +
                    " zero responses but the model has no zero-probability part");
  }
  if (n0 == data.n()) {
    throw DataError("all responses are zero; mean/precision parts are not estimable");
  }
  if (dim() >= data.n()) {
    throw ConfigError("model has " + std::to_string(dim()) +
                      " parameters but only " + std::to_string(data.n()) +
                      " observations");
  }
  auto check_cols = [&](const PredictorSpec& pred, const char* part) {
    for (int c : pred.columns) {
      if (c < 0 || c >= data.cells.cols()) {
        throw ConfigError(std::string(part) + " predictor references column " +
                          std::to_string(c) + " outside the dataset");
      }
    }
  };
  check_cols(mean.predictor, "mean");
  check_cols(precision.predictor, "precision");
  if (zeroprob) check_cols(zeroprob->predictor, "zeroprob");
  if (zeroprob && !zeroprob->link.is_probability_link()) {
    throw ConfigError("zeroprob link must map (0,1); got " +
                      std::string(zeroprob->link.name()));
  }
  if (mean.link.is_probability_link() || precision.link.is_probability_link()) {
    throw ConfigError("mean/precision links must map (0,inf)");
  }
}

std::vector<std::string> ModelSpec::param_names(const Dataset& data) const {
  std::vector<std::string> names = mean.predictor.param_names(data, "mu.");
  for (auto& s : precision.predictor.param_names(data, "sigma.")) names.push_back(s);
  if (zeroprob) {
    for (auto& s : zeroprob->predictor.param_names(data, "nu.")) names.push_back(s);
  }
  return names;
}

std::vector<std::string> ModelSpec::param_blocks() const {
  std::vector<std::string> blocks;
  for (int i = 0; i < p(); ++i) blocks.push_back("mean");
  for (int i = 0; i < q(); ++i) blocks.push_back("precision");
  for (int i = 0; i < r(); ++i) blocks.push_back("zeroprob");
  return blocks;
}

}  // namespace zabs
