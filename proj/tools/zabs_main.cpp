// Batch front end: fit a model described by a config file to a CSV
// dataset, run the residual/influence diagnostics on a stored fit, or
// refit after dropping observations.
//
// Exit codes: 0 ok, 1 config error, 2 data error, 3 non-convergence.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zabs/diagnostics.hpp"
#include "zabs/errors.hpp"
#include "zabs/estimation.hpp"
#include "zabs/io/config.hpp"
#include "zabs/io/csv.hpp"
#include "zabs/io/report.hpp"

namespace {

std::vector<int> parse_drop_list(const std::string& arg) {
  std::vector<int> out;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw zabs::ConfigError("--drop needs at least one index");
  return out;
}

int run_fit(const std::string& config_path, const std::string& data_path,
            const std::string& out_dir) {
  const auto config = zabs::io::parse_config(config_path);
  const auto data = zabs::io::load_csv(data_path);
  const auto model = zabs::io::build_model(config, data);
  model.validate(data);
  try {
    const auto fit = zabs::fit(model, data, zabs::io::fit_options(config));
    zabs::io::write_fit_report(out_dir, config, config_path, data_path, fit);
    std::cout << "fit: converged in " << fit.iterations
              << " iterations, loglik=" << fit.loglik << ", report in "
              << out_dir << "\n";
    return 0;
  } catch (const zabs::FitNonConvergence& e) {
    zabs::io::write_trace(out_dir, e.partial_result);
    std::cerr << "error: " << e.what() << " (trace in " << out_dir << ")\n";
    return 3;
  }
}

int run_diagnose(const std::string& fit_path, const std::string& out_dir,
                 const std::string& data_override) {
  const auto artifact = zabs::io::load_fit_artifact(fit_path);
  const std::string data_path =
      data_override.empty() ? artifact.data_path : data_override;
  const auto data = zabs::io::load_csv(data_path);
  const auto model = zabs::io::build_model(artifact.config, data);
  model.validate(data);
  const auto& fit = artifact.result;
  if (!fit.converged) {
    throw zabs::ConfigError("fit artifact is not a converged fit");
  }
  if (fit.theta.size() != model.dim()) {
    throw zabs::ConfigError(
        "fit artifact does not match the model in its config file");
  }
  const auto resid =
      zabs::quantile_residuals(model, data, fit, artifact.config.seed);
  const auto envelope = zabs::simulated_envelope(
      model, data, fit, artifact.config.envelope_replicates,
      artifact.config.envelope_band, artifact.config.seed);
  const auto influence = zabs::local_influence(model, data, fit);
  zabs::io::write_diagnostics_report(out_dir, model, data, fit, resid,
                                     envelope, influence);
  std::cout << "diagnose: report in " << out_dir << "\n";
  return 0;
}

int run_refit_without(const std::string& fit_path, const std::string& drop_arg,
                      const std::string& out_dir) {
  const auto artifact = zabs::io::load_fit_artifact(fit_path);
  const auto drop = parse_drop_list(drop_arg);
  const auto data = zabs::io::load_csv(artifact.data_path);
  const auto model = zabs::io::build_model(artifact.config, data);
  model.validate(data);

  const auto reduced_data = data.without_rows(drop);
  const auto reduced_model = zabs::io::build_model(artifact.config, reduced_data);
  reduced_model.validate(reduced_data);
  try {
    zabs::FitOptions opt = zabs::io::fit_options(artifact.config);
    opt.warm_start = true;
    opt.theta0 = artifact.result.theta;
    const auto reduced_fit = zabs::fit(reduced_model, reduced_data, opt);
    zabs::io::write_refit_comparison(out_dir, artifact.result, reduced_fit,
                                     drop);
    std::cout << "refit-without: report in " << out_dir << "\n";
    return 0;
  } catch (const zabs::FitNonConvergence& e) {
    zabs::io::write_trace(out_dir, e.partial_result);
    std::cerr << "error: " << e.what() << " (trace in " << out_dir << ")\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zabs: zero-adjusted Birnbaum-Saunders regression"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir = "zabs_out", fit_path,
                                      drop_arg, data_override;

  auto* cmd_fit = app.add_subcommand("fit", "fit a model to a CSV dataset");
  cmd_fit->add_option("--config", config_path, "run configuration file")
      ->required();
  cmd_fit->add_option("--data", data_path, "CSV data file")->required();
  cmd_fit->add_option("--out", out_dir, "output directory");

  auto* cmd_diag =
      app.add_subcommand("diagnose", "residual and influence diagnostics");
  cmd_diag->add_option("--fit", fit_path, "fit.json from a previous fit")
      ->required();
  cmd_diag->add_option("--out", out_dir, "output directory");
  cmd_diag->add_option("--data", data_override, "override the data file");

  auto* cmd_refit = app.add_subcommand(
      "refit-without", "refit after removing observations");
  cmd_refit->add_option("--fit", fit_path, "fit.json from a previous fit")
      ->required();
  cmd_refit
      ->add_option("--drop", drop_arg, "comma-separated 1-based row indices")
      ->required();
  cmd_refit->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_fit->parsed()) return run_fit(config_path, data_path, out_dir);
    if (cmd_diag->parsed()) return run_diagnose(fit_path, out_dir, data_override);
    if (cmd_refit->parsed()) return run_refit_without(fit_path, drop_arg, out_dir);
  } catch (const zabs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const zabs::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const zabs::NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
