#include "zabs/io/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "zabs/errors.hpp"
#include "zabs/io/csv.hpp"
#include "zabs/io/svg.hpp"
#include "zabs/normal.hpp"

namespace zabs::io {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i];
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k];
  }
  return m;
}

void dump_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string round3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

json config_to_json(const RunConfig& c) {
  json j;
  j["response"] = c.response;
  j["mean"] = c.mean.raw;
  if (c.precision) j["precision"] = c.precision->raw;
  if (c.zeroprob) j["zeroprob"] = c.zeroprob->raw;
  j["seed"] = c.seed;
  j["max_iter"] = c.max_iter;
  j["tol_score"] = c.tol_score;
  j["tol_loglik_rel"] = c.tol_loglik_rel;
  j["envelope_replicates"] = c.envelope_replicates;
  j["envelope_band"] = c.envelope_band;
  return j;
}

}  // namespace

void write_fit_report(const std::string& out_dir, const RunConfig& config,
                      const std::string& config_path,
                      const std::string& data_path, const FitResult& fit) {
  fs::create_directories(out_dir);
  const auto rows = wald_inference(fit, 0.95);

  json j;
  j["tool"] = "zabs";
  j["config_path"] = config_path;
  j["data_path"] = data_path;
  j["config"] = config_to_json(config);
  j["n"] = fit.n;
  j["n0"] = fit.n0;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["loglik"] = fit.loglik;
  j["aic"] = fit.aic;
  j["score_max_abs"] = fit.score_max_abs;
  j["p"] = fit.p;
  j["q"] = fit.q;
  j["r"] = fit.r;
  j["theta"] = vector_to_json(fit.theta);
  j["inverse_information"] = matrix_to_json(fit.inverse_information);
  j["param_names"] = fit.param_names;
  j["param_blocks"] = fit.param_blocks;
  j["fitted_mu"] = vector_to_json(fit.mu);
  j["fitted_sigma"] = vector_to_json(fit.sigma);
  j["fitted_nu"] = vector_to_json(fit.nu);
  j["warnings"] = fit.warnings;
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"block", r.block},
                     {"name", r.name},
                     {"estimate", r.estimate},
                     {"se", r.se},
                     {"z", r.z},
                     {"p", r.p_value},
                     {"ci_lo", r.ci_lo},
                     {"ci_hi", r.ci_hi}});
  }
  j["inference"] = table;
  dump_json(out_dir + "/fit.json", j);

  std::ofstream txt(out_dir + "/fit.txt");
  if (!txt) throw DataError("cannot write " + out_dir + "/fit.txt");
  txt << "zabs fit: n=" << fit.n << " (zeros=" << fit.n0 << "), "
      << (fit.converged ? "converged" : "NOT CONVERGED") << " in "
      << fit.iterations << " iterations\n";
  txt << "loglik=" << round3(fit.loglik) << "  AIC=" << round3(fit.aic)
      << "\n\n";
  txt << std::left << std::setw(20) << "parameter" << std::right
      << std::setw(12) << "estimate" << std::setw(12) << "std.err"
      << std::setw(10) << "z" << std::setw(12) << "p-value" << "\n";
  for (const auto& r : rows) {
    std::ostringstream p;
    if (r.p_value < 0.001) {
      p << "<0.001";
    } else {
      p << round3(r.p_value);
    }
    txt << std::left << std::setw(20) << r.name << std::right << std::setw(12)
        << round3(r.estimate) << std::setw(12) << round3(r.se) << std::setw(10)
        << round3(r.z) << std::setw(12) << p.str() << "\n";
  }
  for (const auto& w : fit.warnings) txt << "warning: " << w << "\n";
}

void write_trace(const std::string& out_dir, const FitResult& partial) {
  fs::create_directories(out_dir);
  json j;
  j["converged"] = partial.converged;
  j["iterations"] = partial.iterations;
  j["score_max_abs"] = partial.score_max_abs;
  json tr = json::array();
  for (const auto& rec : partial.trace) {
    tr.push_back({{"iter", rec.iter},
                  {"loglik", rec.loglik},
                  {"step", rec.step},
                  {"theta", vector_to_json(rec.theta)}});
  }
  j["trace"] = tr;
  dump_json(out_dir + "/trace.json", j);
}

FitArtifact load_fit_artifact(const std::string& fit_json_path) {
  std::ifstream in(fit_json_path);
  if (!in) throw DataError("cannot open fit artifact: " + fit_json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("malformed fit artifact " + fit_json_path + ": " + e.what());
  }
  FitArtifact art;
  art.config_path = j.at("config_path");
  art.data_path = j.at("data_path");
  art.config = parse_config(art.config_path);
  FitResult& r = art.result;
  r.n = j.at("n");
  r.n0 = j.at("n0");
  r.p = j.at("p");
  r.q = j.at("q");
  r.r = j.at("r");
  r.converged = j.at("converged");
  r.iterations = j.at("iterations");
  r.loglik = j.at("loglik");
  r.aic = j.at("aic");
  r.score_max_abs = j.at("score_max_abs");
  r.theta = vector_from_json(j.at("theta"));
  r.inverse_information = matrix_from_json(j.at("inverse_information"));
  r.param_names = j.at("param_names").get<std::vector<std::string>>();
  r.param_blocks = j.at("param_blocks").get<std::vector<std::string>>();
  r.mu = vector_from_json(j.at("fitted_mu"));
  r.sigma = vector_from_json(j.at("fitted_sigma"));
  r.nu = vector_from_json(j.at("fitted_nu"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return art;
}

void write_diagnostics_report(const std::string& out_dir,
                              const ModelSpec& model, const Dataset& data,
                              const FitResult& fit, const ResidualSet& resid,
                              const EnvelopeBands& envelope,
                              const InfluenceReport& influence) {
  fs::create_directories(out_dir);
  const int n = data.n();
  const Eigen::VectorXd y = data.cells.col(model.response_column);

  {
    Eigen::MatrixXd cols(n, 7);
    for (int i = 0; i < n; ++i) {
      cols(i, 0) = i + 1;
      cols(i, 1) = y[i];
      cols(i, 2) = resid.mu[i];
      cols(i, 3) = resid.sigma[i];
      cols(i, 4) = resid.nu[i];
      cols(i, 5) = resid.cdf[i];
      cols(i, 6) = resid.r[i];
    }
    write_csv(out_dir + "/residuals.csv",
              {"index", "y", "mu_hat", "sigma_hat", "nu_hat", "cdf", "residual"},
              cols);
  }

  Eigen::VectorXd theo(n);
  for (int i = 0; i < n; ++i) {
    theo[i] = norm_quantile((i + 0.5) / static_cast<double>(n));
  }
  {
    Eigen::MatrixXd cols(n, 6);
    for (int i = 0; i < n; ++i) {
      cols(i, 0) = i + 1;
      cols(i, 1) = theo[i];
      cols(i, 2) = envelope.lower[i];
      cols(i, 3) = envelope.median[i];
      cols(i, 4) = envelope.upper[i];
      cols(i, 5) = envelope.observed[i];
    }
    write_csv(out_dir + "/envelope.csv",
              {"rank", "theoretical", "lower", "median", "upper", "observed"},
              cols);
  }

  const bool has_gamma = fit.r > 0;
  {
    const int ncol = has_gamma ? 5 : 4;
    Eigen::MatrixXd cols(n, ncol);
    for (int i = 0; i < n; ++i) {
      int k = 0;
      cols(i, k++) = i + 1;
      cols(i, k++) = influence.beta.c[i];
      cols(i, k++) = influence.alpha.c[i];
      if (has_gamma) cols(i, k++) = influence.gamma.c[i];
      cols(i, k++) = influence.theta.c[i];
    }
    std::vector<std::string> header = {"index", "C_beta", "C_alpha"};
    if (has_gamma) header.push_back("C_gamma");
    header.push_back("C_theta");
    write_csv(out_dir + "/influence.csv", header, cols);
  }
  {
    const int ncol = has_gamma ? 5 : 4;
    Eigen::MatrixXd cols(n, ncol);
    for (int i = 0; i < n; ++i) {
      int k = 0;
      cols(i, k++) = i + 1;
      cols(i, k++) = influence.beta.d_max[i];
      cols(i, k++) = influence.alpha.d_max[i];
      if (has_gamma) cols(i, k++) = influence.gamma.d_max[i];
      cols(i, k++) = influence.theta.d_max[i];
    }
    std::vector<std::string> header = {"index", "dmax_beta", "dmax_alpha"};
    if (has_gamma) header.push_back("dmax_gamma");
    header.push_back("dmax_theta");
    write_csv(out_dir + "/dmax.csv", header, cols);
  }

  json flags;
  auto block_json = [](const BlockInfluence& b) {
    json out;
    out["c_bar"] = b.c_bar;
    out["threshold"] = 2.0 * b.c_bar;
    out["flagged"] = b.flagged;
    return out;
  };
  flags["beta"] = block_json(influence.beta);
  flags["alpha"] = block_json(influence.alpha);
  if (has_gamma) flags["gamma"] = block_json(influence.gamma);
  flags["theta"] = block_json(influence.theta);
  flags["ridge_used"] = influence.ridge_used;
  flags["residuals_clipped"] = resid.clipped;
  flags["envelope_replicates_used"] = envelope.replicates_used;
  flags["envelope_replicates_failed"] = envelope.replicates_failed;
  dump_json(out_dir + "/flagged.json", flags);

  // Plots: QQ with envelope, residual vs fitted mean, C_i and |d_max| index.
  {
    std::vector<SvgSeries> series;
    SvgSeries obs;
    obs.x.assign(theo.data(), theo.data() + n);
    obs.y.assign(envelope.observed.data(), envelope.observed.data() + n);
    obs.color = "#1f3f77";
    SvgSeries lo = obs, mid = obs, hi = obs;
    lo.y.assign(envelope.lower.data(), envelope.lower.data() + n);
    lo.line = true;
    lo.color = "#aa3311";
    mid.y.assign(envelope.median.data(), envelope.median.data() + n);
    mid.line = true;
    mid.dashed = true;
    mid.color = "#777777";
    hi.y.assign(envelope.upper.data(), envelope.upper.data() + n);
    hi.line = true;
    hi.color = "#aa3311";
    series = {lo, mid, hi, obs};
    write_svg_plot(out_dir + "/qq_envelope.svg", "Residual QQ with envelope",
                   "theoretical quantile", "empirical quantile", series);
  }
  {
    SvgSeries pts;
    for (int i = 0; i < n; ++i) {
      pts.x.push_back((1.0 - resid.nu[i]) * resid.mu[i]);  // fitted mean
      pts.y.push_back(resid.r[i]);
    }
    pts.color = "#1f3f77";
    write_svg_plot(out_dir + "/resid_fitted.svg", "Residuals vs fitted values",
                   "fitted value", "quantile residual", {pts});
  }
  {
    SvgSeries pts;
    for (int i = 0; i < n; ++i) {
      pts.x.push_back(i + 1);
      pts.y.push_back(influence.theta.c[i]);
    }
    pts.color = "#1f3f77";
    SvgSeries thr;
    thr.x = {1.0, static_cast<double>(n)};
    thr.y = {2.0 * influence.theta.c_bar, 2.0 * influence.theta.c_bar};
    thr.line = true;
    thr.dashed = true;
    thr.color = "#aa3311";
    write_svg_plot(out_dir + "/ci_index.svg", "Curvature C_i (full theta)",
                   "index", "C_i", {thr, pts});
  }
  {
    SvgSeries pts;
    for (int i = 0; i < n; ++i) {
      pts.x.push_back(i + 1);
      pts.y.push_back(std::fabs(influence.theta.d_max[i]));
    }
    pts.color = "#1f3f77";
    write_svg_plot(out_dir + "/dmax_index.svg", "|d_max| (full theta)", "index",
                   "|d_max|", {pts});
  }
}

void write_refit_comparison(const std::string& out_dir,
                            const FitResult& base_fit,
                            const FitResult& reduced_fit,
                            const std::vector<int>& dropped) {
  fs::create_directories(out_dir);
  const auto base = wald_inference(base_fit, 0.95);
  const auto reduced = wald_inference(reduced_fit, 0.95);

  bool inferential_change = false;
  json rows = json::array();
  for (std::size_t k = 0; k < base.size(); ++k) {
    const bool sig_base = base[k].p_value < 0.05;
    const bool sig_reduced = reduced[k].p_value < 0.05;
    if (sig_base != sig_reduced) inferential_change = true;
    const double denom = std::fabs(base[k].estimate) > 0.0
                             ? std::fabs(base[k].estimate)
                             : 1.0;
    rows.push_back(
        {{"name", base[k].name},
         {"estimate", base[k].estimate},
         {"estimate_reduced", reduced[k].estimate},
         {"relative_change", (reduced[k].estimate - base[k].estimate) / denom},
         {"se", base[k].se},
         {"se_reduced", reduced[k].se},
         {"p", base[k].p_value},
         {"p_reduced", reduced[k].p_value},
         {"significant_5pct", sig_base},
         {"significant_5pct_reduced", sig_reduced}});
  }
  json j;
  j["dropped"] = dropped;
  j["inferential_change"] = inferential_change;
  j["loglik"] = base_fit.loglik;
  j["loglik_reduced"] = reduced_fit.loglik;
  j["parameters"] = rows;
  dump_json(out_dir + "/comparison.json", j);

  std::ofstream txt(out_dir + "/comparison.txt");
  if (!txt) throw DataError("cannot write " + out_dir + "/comparison.txt");
  txt << "refit without observations:";
  for (int i : dropped) txt << " " << i;
  txt << "\ninferential change at 5%: " << (inferential_change ? "YES" : "no")
      << "\n\n";
  txt << std::left << std::setw(20) << "parameter" << std::right
      << std::setw(12) << "full" << std::setw(12) << "reduced" << std::setw(12)
      << "rel.change" << "\n";
  for (const auto& row : rows) {
    txt << std::left << std::setw(20) << row["name"].get<std::string>()
        << std::right << std::setw(12) << round3(row["estimate"])
        << std::setw(12) << round3(row["estimate_reduced"]) << std::setw(12)
        << round3(row["relative_change"]) << "\n";
  }
}

}  // namespace zabs::io
