#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"
#include "zabs/errors.hpp"
#include "zabs/io/config.hpp"
#include "zabs/io/csv.hpp"
#include "zabs/io/report.hpp"

using namespace zabs;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string out_file =
      (fs::temp_directory_path() / "zabs_cli_out.txt").string();
  const std::string cmd =
      test::cli_path() + " " + args + " > " + out_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: formulas, options, errors") {
  const std::string path = write_temp("cfg_ok.toml",
                                      "# comment\n"
                                      "response: y\n"
                                      "mean: log ~ x1 + x2\n"
                                      "precision: identity ~ 1\n"
                                      "zeroprob: probit ~ x1 + x3\n"
                                      "seed: 99\n"
                                      "max_iter: 77\n"
                                      "envelope_replicates: 33\n"
                                      "envelope_band: 0.9\n");
  const auto cfg = io::parse_config(path);
  CHECK(cfg.response == "y");
  CHECK(cfg.mean.link == "log");
  CHECK(cfg.mean.terms == std::vector<std::string>{"x1", "x2"});
  CHECK(cfg.precision->link == "identity");
  CHECK(cfg.precision->terms.empty());
  CHECK(cfg.zeroprob->terms == std::vector<std::string>{"x1", "x3"});
  CHECK(cfg.seed == 99);
  CHECK(cfg.max_iter == 77);
  CHECK(cfg.envelope_replicates == 33);

  const auto nl = io::parse_config(write_temp(
      "cfg_nl.toml",
      "response: y\nmean: nonlinear exp_ratio(work)\nseed: 1\n"));
  CHECK(nl.mean.nonlinear);
  CHECK(nl.mean.nonlinear_form == "exp_ratio");
  CHECK(nl.mean.nonlinear_column == "work");

  CHECK_THROWS_AS(
      io::parse_config(write_temp("cfg_noresp.toml", "mean: log ~ x\nseed: 1\n")),
      ConfigError);
  CHECK_THROWS_AS(
      io::parse_config(write_temp("cfg_noseed.toml",
                                  "response: y\nmean: log ~ x\n")),
      ConfigError);
  CHECK_THROWS_AS(io::parse_config(write_temp(
                      "cfg_badkey.toml",
                      "response: y\nmean: log ~ x\nseed: 1\nbogus: 2\n")),
                  ConfigError);
  CHECK_THROWS_AS(io::parse_config(write_temp(
                      "cfg_badform.toml",
                      "response: y\nmean: log x1 + x2\nseed: 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(io::parse_config(write_temp(
                      "cfg_badnl.toml",
                      "response: y\nmean: nonlinear wavelet(w)\nseed: 1\n")),
                  ConfigError);
}

TEST_CASE("model building resolves columns and validates links") {
  Eigen::MatrixXd cells(4, 3);
  cells << 1.0, 2.0, 0.5, 0.0, 1.0, 0.25, 2.0, 0.5, 0.125, 3.0, 0.25, 0.0625;
  const auto data = test::make_dataset(cells, {"y", "x1", "x2"}, 0);

  const auto cfg = io::parse_config(write_temp(
      "cfg_build.toml",
      "response: y\nmean: log ~ x1\nzeroprob: probit ~ x2\nseed: 3\n"));
  const auto model = io::build_model(cfg, data);
  CHECK(model.response_column == 0);
  CHECK(model.mean.predictor.columns == std::vector<int>{1});
  CHECK(model.zeroprob->predictor.columns == std::vector<int>{2});
  CHECK(model.p() == 2);  // intercept + x1
  CHECK(model.q() == 1);  // default: log ~ 1
  CHECK(model.r() == 2);

  const auto bad_col = io::parse_config(write_temp(
      "cfg_badcol.toml", "response: y\nmean: log ~ nope\nseed: 3\n"));
  CHECK_THROWS_AS(io::build_model(bad_col, data), ConfigError);

  const auto bad_link = io::parse_config(write_temp(
      "cfg_badlink.toml",
      "response: y\nmean: log ~ x1\nzeroprob: log ~ x2\nseed: 3\n"));
  CHECK_THROWS_AS(io::build_model(bad_link, data).validate(data), ConfigError);
}

TEST_CASE("csv loading: happy path and located errors") {
  const auto data = io::load_csv(
      write_temp("ok.csv", "a,b\n1.5,2\n-3e2,0.125\n"));
  CHECK(data.columns == std::vector<std::string>{"a", "b"});
  CHECK(data.n() == 2);
  CHECK(data.cells(1, 0) == -300.0);

  CHECK_THROWS_WITH_AS(io::load_csv(write_temp("bad1.csv", "a,b\n1,x7\n")),
                       doctest::Contains("row 2"), DataError);
  CHECK_THROWS_WITH_AS(io::load_csv(write_temp("bad1.csv", "a,b\n1,x7\n")),
                       doctest::Contains("column 'b'"), DataError);
  CHECK_THROWS_WITH_AS(io::load_csv(write_temp("bad2.csv", "a,b\n1,\n")),
                       doctest::Contains("missing"), DataError);
  CHECK_THROWS_AS(io::load_csv(write_temp("bad3.csv", "a,b\n1,2,3\n")),
                  DataError);
  CHECK_THROWS_AS(io::load_csv(write_temp("bad4.csv", "")), DataError);
  CHECK_THROWS_AS(io::load_csv("/nonexistent/nope.csv"), DataError);
}

TEST_CASE("cli fit: report matches the library and runs are deterministic") {
  const std::string src = test::source_dir();
  const std::string out1 = (fs::temp_directory_path() / "zabs_fit1").string();
  const std::string out2 = (fs::temp_directory_path() / "zabs_fit2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);

  const auto run1 = run_cli("fit --config " + src + "/configs/biaxial.toml" +
                            " --data " + src + "/data/biaxial_fatigue.csv" +
                            " --out " + out1);
  CAPTURE(run1.output);
  CHECK(run1.exit_code == 0);
  const auto run2 = run_cli("fit --config " + src + "/configs/biaxial.toml" +
                            " --data " + src + "/data/biaxial_fatigue.csv" +
                            " --out " + out2);
  CHECK(run2.exit_code == 0);
  CHECK(slurp(out1 + "/fit.json") == slurp(out2 + "/fit.json"));

  // Library/report equivalence, bit for bit through the JSON round trip.
  const auto data = io::load_csv(src + "/data/biaxial_fatigue.csv");
  const auto cfg = io::parse_config(src + "/configs/biaxial.toml");
  const auto model = io::build_model(cfg, data);
  const auto result = fit(model, data, io::fit_options(cfg));
  nlohmann::json j;
  std::ifstream in(out1 + "/fit.json");
  in >> j;
  REQUIRE(j["theta"].size() == static_cast<std::size_t>(result.theta.size()));
  for (int k = 0; k < result.theta.size(); ++k) {
    CHECK(j["theta"][k].get<double>() == result.theta[k]);
  }
  CHECK(j["converged"].get<bool>());
  CHECK(j["n"].get<int>() == 46);
  CHECK(j["aic"].get<double>() == result.aic);
}

TEST_CASE("cli exit codes: config, data, non-convergence") {
  const std::string src = test::source_dir();
  const auto bad_cfg = run_cli("fit --config /nonexistent.toml --data " + src +
                               "/data/biaxial_fatigue.csv --out /tmp/zabs_x1");
  CHECK(bad_cfg.exit_code == 1);

  const std::string broken_csv =
      write_temp("broken.csv", "work,y\n1.0,2.0\n3.0,oops\n");
  const auto bad_data =
      run_cli("fit --config " + src + "/configs/biaxial.toml --data " +
              broken_csv + " --out /tmp/zabs_x2");
  CHECK(bad_data.exit_code == 2);
  CHECK(bad_data.output.find("row 3") != std::string::npos);

  const std::string hard_cfg = write_temp("hard.toml",
                                          "response: y\n"
                                          "mean: nonlinear exp_ratio(work)\n"
                                          "precision: identity ~ 1\n"
                                          "seed: 5\n"
                                          "max_iter: 1\n"
                                          "tol_score: 1e-13\n"
                                          "tol_loglik_rel: 1e-16\n");
  const std::string out3 = (fs::temp_directory_path() / "zabs_fit3").string();
  fs::remove_all(out3);
  const auto nonconv =
      run_cli("fit --config " + hard_cfg + " --data " + src +
              "/data/biaxial_fatigue.csv --out " + out3);
  CHECK(nonconv.exit_code == 3);
  CHECK(fs::exists(out3 + "/trace.json"));
}

TEST_CASE("cli diagnose and refit-without") {
  const std::string src = test::source_dir();
  const std::string fit_dir = (fs::temp_directory_path() / "zabs_d0").string();
  const std::string diag1 = (fs::temp_directory_path() / "zabs_d1").string();
  const std::string diag2 = (fs::temp_directory_path() / "zabs_d2").string();
  const std::string refit_dir = (fs::temp_directory_path() / "zabs_d3").string();
  for (const auto& d : {fit_dir, diag1, diag2, refit_dir}) fs::remove_all(d);

  const std::string cfg = write_temp("diag.toml",
                                     "response: y\n"
                                     "mean: nonlinear exp_ratio(work)\n"
                                     "precision: identity ~ 1\n"
                                     "seed: 20260808\n"
                                     "envelope_replicates: 25\n");
  const auto fit_run = run_cli("fit --config " + cfg + " --data " + src +
                               "/data/biaxial_fatigue.csv --out " + fit_dir);
  CAPTURE(fit_run.output);
  REQUIRE(fit_run.exit_code == 0);

  const auto d1 = run_cli("diagnose --fit " + fit_dir + "/fit.json --out " + diag1);
  CAPTURE(d1.output);
  CHECK(d1.exit_code == 0);
  for (const char* f :
       {"residuals.csv", "envelope.csv", "influence.csv", "dmax.csv",
        "flagged.json", "qq_envelope.svg", "resid_fitted.svg", "ci_index.svg",
        "dmax_index.svg"}) {
    CHECK(fs::exists(diag1 + "/" + f));
  }

  const auto d2 = run_cli("diagnose --fit " + fit_dir + "/fit.json --out " + diag2);
  CHECK(d2.exit_code == 0);
  CHECK(slurp(diag1 + "/residuals.csv") == slurp(diag2 + "/residuals.csv"));
  CHECK(slurp(diag1 + "/envelope.csv") == slurp(diag2 + "/envelope.csv"));

  // Flag rule agreement between the emitted table and the threshold.
  {
    nlohmann::json flags;
    std::ifstream in(diag1 + "/flagged.json");
    in >> flags;
    const double thr = flags["theta"]["threshold"].get<double>();
    std::ifstream ctab(diag1 + "/influence.csv");
    std::string line;
    std::getline(ctab, line);  // header
    std::vector<int> expect;
    int idx = 0;
    while (std::getline(ctab, line)) {
      ++idx;
      const auto last_comma = line.find_last_of(',');
      const double c_theta = std::stod(line.substr(last_comma + 1));
      if (c_theta > thr) expect.push_back(idx);
    }
    CHECK(flags["theta"]["flagged"].get<std::vector<int>>() == expect);
  }

  const auto r1 = run_cli("refit-without --fit " + fit_dir +
                          "/fit.json --drop 1,2 --out " + refit_dir);
  CAPTURE(r1.output);
  CHECK(r1.exit_code == 0);
  {
    nlohmann::json cmp;
    std::ifstream in(refit_dir + "/comparison.json");
    in >> cmp;
    CHECK(cmp["dropped"].get<std::vector<int>>() == std::vector<int>{1, 2});
    CHECK(cmp.contains("inferential_change"));
    CHECK(cmp["parameters"].size() == 3);
  }

  const auto bad_drop = run_cli("refit-without --fit " + fit_dir +
                                "/fit.json --drop , --out /tmp/zabs_x9");
  CHECK(bad_drop.exit_code == 1);
}

TEST_CASE("dropping nothing reproduces the fit") {
  const auto src = test::source_dir();
  const auto data = io::load_csv(src + "/data/biaxial_fatigue.csv");
  const auto same = data.without_rows({});
  CHECK(same.cells == data.cells);

  auto ex = test::make_zabs_example(150, 55000);
  const auto f1 = fit(ex.model, ex.data);
  const auto f2 = fit(ex.model, ex.data.without_rows({}));
  CHECK((f1.theta - f2.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cli: intercept-only zero model reports the raw zero fraction") {
  const std::string src = test::source_dir();
  const std::string cfg = write_temp("nu_only.toml",
                                     "response: y\n"
                                     "mean: log ~ x1\n"
                                     "precision: log ~ 1\n"
                                     "zeroprob: probit ~ 1\n"
                                     "seed: 11\n");
  const std::string out = (fs::temp_directory_path() / "zabs_nu").string();
  fs::remove_all(out);
  const auto run = run_cli("fit --config " + cfg + " --data " + src +
                           "/data/zabs_demo.csv --out " + out);
  CAPTURE(run.output);
  REQUIRE(run.exit_code == 0);
  nlohmann::json j;
  std::ifstream in(out + "/fit.json");
  in >> j;
  const int n = j["n"].get<int>();
  const int n0 = j["n0"].get<int>();
  double gamma0 = 0.0;
  for (std::size_t k = 0; k < j["param_names"].size(); ++k) {
    if (j["param_names"][k] == "nu.(Intercept)") {
      gamma0 = j["theta"][k].get<double>();
    }
  }
  CHECK(Link(LinkKind::Probit).inverse(gamma0) ==
        doctest::Approx(static_cast<double>(n0) / n).epsilon(1e-9));
}

TEST_CASE("removing a typical point does not change the inference verdicts") {
  auto ex = test::make_clean_example(200, 57000);
  const auto base = fit(ex.model, ex.data);
  const auto reduced = fit(ex.model, ex.data.without_rows({41}));
  const auto wb = wald_inference(base);
  const auto wr = wald_inference(reduced);
  for (std::size_t k = 0; k < wb.size(); ++k) {
    CHECK((wb[k].p_value < 0.05) == (wr[k].p_value < 0.05));
  }
}

TEST_CASE("zero-model report exposes the exact zero fraction") {
  auto ex = test::make_zabs_example(200, 56000);
  ex.model.zeroprob =
      ComponentSpec{PredictorSpec::linear({}), Link(LinkKind::Probit)};
  const auto result = fit(ex.model, ex.data);
  const double nu_hat = Link(LinkKind::Probit)
                            .inverse(result.theta[ex.model.p() + ex.model.q()]);
  CHECK(nu_hat == doctest::Approx(static_cast<double>(result.n0) / result.n)
                      .epsilon(1e-9));
}
