#include "zabs/links.hpp"

#include <cmath>

#include "zabs/errors.hpp"
#include "zabs/normal.hpp"

namespace zabs {

Link Link::from_name(const std::string& name) {
  if (name == "log") return Link(LinkKind::Log);
  if (name == "sqrt") return Link(LinkKind::Sqrt);
  if (name == "identity") return Link(LinkKind::IdentityPositive);
  if (name == "logit") return Link(LinkKind::Logit);
  if (name == "probit") return Link(LinkKind::Probit);
  if (name == "cloglog") return Link(LinkKind::Cloglog);
  throw ConfigError("unknown link function: '" + name + "'");
}

const char* Link::name() const {
  switch (kind_) {
    case LinkKind::Log: return "log";
    case LinkKind::Sqrt: return "sqrt";
    case LinkKind::IdentityPositive: return "identity";
    case LinkKind::Logit: return "logit";
    case LinkKind::Probit: return "probit";
    case LinkKind::Cloglog: return "cloglog";
  }
  return "?";
}

bool Link::is_probability_link() const {
  return kind_ == LinkKind::Logit || kind_ == LinkKind::Probit ||
         kind_ == LinkKind::Cloglog;
}

bool Link::in_domain(double x) const {
  if (!std::isfinite(x)) return false;
  return is_probability_link() ? (x > 0.0 && x < 1.0) : (x > 0.0);
}

double Link::eval(double x) const {
  if (!in_domain(x)) throw std::domain_error(std::string("link ") + name() + ": argument outside domain");
  switch (kind_) {
    case LinkKind::Log: return std::log(x);
    case LinkKind::Sqrt: return std::sqrt(x);
    case LinkKind::IdentityPositive: return x;
    case LinkKind::Logit: return std::log(x / (1.0 - x));
    case LinkKind::Probit: return norm_quantile(x);
    case LinkKind::Cloglog: return std::log(-std::log1p(-x));
  }
  return 0.0;
}

double Link::inverse(double eta) const {
  switch (kind_) {
    case LinkKind::Log: return std::exp(eta);
    case LinkKind::Sqrt: return eta * eta;
    case LinkKind::IdentityPositive: return eta;
    case LinkKind::Logit: return 1.0 / (1.0 + std::exp(-eta));
    case LinkKind::Probit: return norm_cdf(eta);
    case LinkKind::Cloglog: return -std::expm1(-std::exp(eta));
  }
  return 0.0;
}

double Link::deriv(double x) const {
  if (!in_domain(x)) throw std::domain_error(std::string("link ") + name() + ": argument outside domain");
  switch (kind_) {
    case LinkKind::Log: return 1.0 / x;
    case LinkKind::Sqrt: return 0.5 / std::sqrt(x);
    case LinkKind::IdentityPositive: return 1.0;
    case LinkKind::Logit: return 1.0 / (x * (1.0 - x));
    case LinkKind::Probit: return 1.0 / norm_pdf(norm_quantile(x));
    case LinkKind::Cloglog: {
      const double l = -std::log1p(-x);  // > 0
      return 1.0 / ((1.0 - x) * l);
    }
  }
  return 0.0;
}

double Link::deriv2(double x) const {
  if (!in_domain(x)) throw std::domain_error(std::string("link ") + name() + ": argument outside domain");
  switch (kind_) {
    case LinkKind::Log: return -1.0 / (x * x);
    case LinkKind::Sqrt: return -0.25 / (x * std::sqrt(x));
    case LinkKind::IdentityPositive: return 0.0;
    case LinkKind::Logit: return (2.0 * x - 1.0) / (x * x * (1.0 - x) * (1.0 - x));
    case LinkKind::Probit: {
      const double q = norm_quantile(x);
      const double f = norm_pdf(q);
      return q / (f * f);
    }
    case LinkKind::Cloglog: {
      const double om = 1.0 - x;
      const double l = -std::log1p(-x);
      return (1.0 - 1.0 / l) / (om * om * l);
    }
  }
  return 0.0;
}

}  // namespace zabs
