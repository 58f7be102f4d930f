#pragma once

// Declarative run configuration: one key/value file describing the three
// systematic components plus fit and diagnostics options, e.g.
//
//   response: y
//   mean: log ~ x1 + x2
//   precision: identity ~ 1
//   zeroprob: probit ~ x1 + x2 + x3
//   seed: 20240811
//
// A component may instead use the builtin nonlinear form
//   mean: nonlinear exp_ratio(w)
// which composes the identity link with eta = b1 * exp(b2 / w).

#include <cstdint>
#include <optional>
#include <string>

#include "zabs/estimation.hpp"
#include "zabs/model.hpp"

namespace zabs::io {

struct FormulaSpec {
  std::string link;
  bool nonlinear = false;
  std::string nonlinear_form;        // "exp_ratio"
  std::string nonlinear_column;
  std::vector<std::string> terms;    // linear: column names; empty = intercept-only
  std::string raw;
};

struct RunConfig {
  std::string response;
  FormulaSpec mean;
  std::optional<FormulaSpec> precision;
  std::optional<FormulaSpec> zeroprob;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int max_iter = 200;
  double tol_score = 1e-6;
  double tol_loglik_rel = 1e-10;
  int envelope_replicates = 100;
  double envelope_band = 0.95;
};

RunConfig parse_config(const std::string& path);

// Resolves column names against the data and assembles the model.
ModelSpec build_model(const RunConfig& config, const Dataset& data);

FitOptions fit_options(const RunConfig& config);

}  // namespace zabs::io
