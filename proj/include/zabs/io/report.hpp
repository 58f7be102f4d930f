#pragma once

// Report emission and the fit artifact. fit.json holds the estimates at
// full precision together with the config/data locations, so diagnose and
// refit-without can rebuild the fitted model exactly.

#include <string>

#include "zabs/diagnostics.hpp"
#include "zabs/estimation.hpp"
#include "zabs/io/config.hpp"

namespace zabs::io {

struct FitArtifact {
  std::string config_path;
  std::string data_path;
  RunConfig config;
  FitResult result;
};

// fit.json (machine readable, full precision) + fit.txt (rounded table).
void write_fit_report(const std::string& out_dir, const RunConfig& config,
                      const std::string& config_path,
                      const std::string& data_path, const FitResult& fit);

// Written on non-convergence (exit code 3): the iteration trace.
void write_trace(const std::string& out_dir, const FitResult& partial);

FitArtifact load_fit_artifact(const std::string& fit_json_path);

void write_diagnostics_report(const std::string& out_dir,
                              const ModelSpec& model, const Dataset& data,
                              const FitResult& fit, const ResidualSet& resid,
                              const EnvelopeBands& envelope,
                              const InfluenceReport& influence);

// Side-by-side estimates before/after dropping observations, with relative
// changes and a flag when any 5% significance verdict flips.
void write_refit_comparison(const std::string& out_dir,
                            const FitResult& base_fit,
                            const FitResult& reduced_fit,
                            const std::vector<int>& dropped);

}  // namespace zabs::io
