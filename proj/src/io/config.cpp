#include "zabs/io/config.hpp"

#include <charconv>
#include <fstream>

#include "zabs/errors.hpp"

namespace zabs::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  double x;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("bad numeric value for '" + key + "': " + v);
  }
  return x;
}

long long parse_int(const std::string& v, const std::string& key) {
  long long x;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("bad integer value for '" + key + "': " + v);
  }
  return x;
}

FormulaSpec parse_formula(const std::string& value, const std::string& key) {
  FormulaSpec f;
  f.raw = value;
  if (value.rfind("nonlinear", 0) == 0) {
    std::string rest = trim(value.substr(9));
    const auto open = rest.find('(');
    const auto close = rest.find(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw ConfigError("malformed nonlinear form for '" + key + "': " + value);
    }
    f.nonlinear = true;
    f.nonlinear_form = trim(rest.substr(0, open));
    f.nonlinear_column = trim(rest.substr(open + 1, close - open - 1));
    f.link = "identity";
    if (f.nonlinear_form != "exp_ratio") {
      throw ConfigError("unknown nonlinear form '" + f.nonlinear_form +
                        "' for '" + key + "'");
    }
    if (f.nonlinear_column.empty()) {
      throw ConfigError("nonlinear form for '" + key + "' needs a column");
    }
    return f;
  }
  const auto tilde = value.find('~');
  if (tilde == std::string::npos) {
    throw ConfigError("formula for '" + key + "' needs '<link> ~ <terms>': " + value);
  }
  f.link = trim(value.substr(0, tilde));
  if (f.link.empty()) throw ConfigError("missing link in formula for '" + key + "'");
  std::string terms = trim(value.substr(tilde + 1));
  if (terms.empty()) throw ConfigError("missing terms in formula for '" + key + "'");
  std::size_t pos = 0;
  while (pos != std::string::npos) {
    const auto plus = terms.find('+', pos);
    const std::string term =
        trim(plus == std::string::npos ? terms.substr(pos)
                                       : terms.substr(pos, plus - pos));
    if (term.empty()) throw ConfigError("empty term in formula for '" + key + "'");
    if (term != "1") f.terms.push_back(term);  // "1" = intercept-only marker
    pos = plus == std::string::npos ? std::string::npos : plus + 1;
  }
  return f;
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  bool has_mean = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key: value'");
    }
    const std::string key = trim(t.substr(0, colon));
    const std::string value = trim(t.substr(colon + 1));
    if (key == "response") {
      cfg.response = value;
    } else if (key == "mean") {
      cfg.mean = parse_formula(value, key);
      has_mean = true;
    } else if (key == "precision") {
      cfg.precision = parse_formula(value, key);
    } else if (key == "zeroprob") {
      cfg.zeroprob = parse_formula(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
      cfg.seed_set = true;
    } else if (key == "max_iter") {
      cfg.max_iter = static_cast<int>(parse_int(value, key));
    } else if (key == "tol_score") {
      cfg.tol_score = parse_double(value, key);
    } else if (key == "tol_loglik_rel") {
      cfg.tol_loglik_rel = parse_double(value, key);
    } else if (key == "envelope_replicates") {
      cfg.envelope_replicates = static_cast<int>(parse_int(value, key));
    } else if (key == "envelope_band") {
      cfg.envelope_band = parse_double(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "' (line " +
                        std::to_string(lineno) + ")");
    }
  }
  if (cfg.response.empty()) throw ConfigError("config is missing 'response'");
  if (!has_mean) throw ConfigError("config is missing 'mean'");
  if (!cfg.seed_set) {
    throw ConfigError("config is missing 'seed' (seeds are explicit by contract)");
  }
  return cfg;
}

namespace {

PredictorSpec build_predictor(const FormulaSpec& f, const Dataset& data,
                              const std::string& part) {
  if (f.nonlinear) {
    const int col = data.column_index(f.nonlinear_column);
    if (col < 0) {
      throw ConfigError(part + ": column '" + f.nonlinear_column +
                        "' not in data");
    }
    return PredictorSpec::exp_ratio(col);
  }
  std::vector<int> cols;
  for (const auto& term : f.terms) {
    const int col = data.column_index(term);
    if (col < 0) throw ConfigError(part + ": column '" + term + "' not in data");
    cols.push_back(col);
  }
  return PredictorSpec::linear(cols);
}

}  // namespace

ModelSpec build_model(const RunConfig& config, const Dataset& data) {
  ModelSpec model;
  model.response_column = data.column_index(config.response);
  if (model.response_column < 0) {
    throw ConfigError("response column '" + config.response + "' not in data");
  }
  model.mean = ComponentSpec{build_predictor(config.mean, data, "mean"),
                             Link::from_name(config.mean.link)};
  const FormulaSpec prec = config.precision.value_or([] {
    FormulaSpec f;
    f.link = "log";
    f.raw = "log ~ 1";
    return f;
  }());
  model.precision = ComponentSpec{build_predictor(prec, data, "precision"),
                                  Link::from_name(prec.link)};
  if (config.zeroprob) {
    model.zeroprob =
        ComponentSpec{build_predictor(*config.zeroprob, data, "zeroprob"),
                      Link::from_name(config.zeroprob->link)};
  }
  return model;
}

FitOptions fit_options(const RunConfig& config) {
  FitOptions opt;
  opt.max_iter = config.max_iter;
  opt.tol_score = config.tol_score;
  opt.tol_loglik_rel = config.tol_loglik_rel;
  if (const char* env = std::getenv("ZABS_QUAD_TOL")) {
    opt.lambda_rel_tol = parse_double(env, "ZABS_QUAD_TOL");
  }
  return opt;
}

}  // namespace zabs::io
