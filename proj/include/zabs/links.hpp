#pragma once

// Link functions tying the mean/precision (positive) and zero-probability
// (unit-interval) parameters to real-valued predictors. Each link carries
// analytic first and second derivatives; the scoring weights are
// a = 1/g'(mu), b = 1/g'(sigma), c = 1/g'(nu) and their mu-derivatives.

#include <string>

namespace zabs {

enum class LinkKind {
  Log,
  Sqrt,
  IdentityPositive,  // positive-domain identity, guarded by the fitter
  Logit,
  Probit,
  Cloglog,
};

class Link {
 public:
  explicit Link(LinkKind kind) : kind_(kind) {}

  // Resolves a config name like "log" or "probit".
  static Link from_name(const std::string& name);

  LinkKind kind() const { return kind_; }
  const char* name() const;

  // True for the unit-interval links (logit/probit/cloglog).
  bool is_probability_link() const;

  double eval(double x) const;      // g(x),  x in the link domain
  double inverse(double eta) const; // g^{-1}(eta)
  double deriv(double x) const;     // g'(x), strictly positive
  double deriv2(double x) const;    // g''(x)

  // True when x lies strictly inside the link domain.
  bool in_domain(double x) const;

 private:
  LinkKind kind_;
};

}  // namespace zabs
