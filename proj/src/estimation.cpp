#include "zabs/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "zabs/distributions.hpp"
#include "zabs/errors.hpp"
#include "zabs/normal.hpp"
#include "zabs/quadrature.hpp"

namespace zabs {

namespace {

constexpr double kLog16Pi = 3.9173186080891814118;
constexpr double kNuClamp = 1e-15;
constexpr double kSigmaFloor = 1e-10;  // identity-link guard

// lambda for mu = 1; general mu rescales by 1/mu^2 (substituting y -> mu*y
// in the integral shows lambda(mu, s) = lambda(1, s)/mu^2).
double lambda_unit(double sigma, double rel_tol) {
  const RbsParams p(1.0, sigma);
  const double beta = sigma / (sigma + 1.0);
  auto f = [&](double t) {
    const double d = t + beta;
    return std::exp(rbs_logpdf(t, p)) / (d * d);
  };
  const auto q = integrate_half_line(f, rel_tol);
  if (!q.converged) {
    throw NumericError("lambda quadrature failed: error " +
                       std::to_string(q.abs_error) + " after " +
                       std::to_string(q.subdivisions) + " subdivisions (sigma=" +
                       std::to_string(sigma) + ")");
  }
  return q.value;
}

// Memo for lambda(1, sigma) within one information evaluation; constant-
// precision models hit a single entry.
class LambdaCache {
 public:
  explicit LambdaCache(double rel_tol) : rel_tol_(rel_tol) {}

  double operator()(double mu, double sigma) {
    auto it = memo_.find(sigma);
    double unit;
    if (it != memo_.end()) {
      unit = it->second;
    } else {
      unit = lambda_unit(sigma, rel_tol_);
      memo_.emplace(sigma, unit);
    }
    return unit / (mu * mu);
  }

 private:
  double rel_tol_;
  std::unordered_map<double, double> memo_;
};

struct EvalState {
  bool valid = false;
  double ll = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd mu, sigma, nu;
};

// Everything the scoring loop needs at one theta.
class Evaluator {
 public:
  Evaluator(const ModelSpec& model, const Dataset& data, double lambda_rel_tol)
      : model_(model),
        data_(data),
        y_(data.cells.col(model.response_column)),
        lambda_rel_tol_(lambda_rel_tol) {
    n_ = data_.n();
    kappa_.resize(n_);
    for (int i = 0; i < n_; ++i) kappa_[i] = y_[i] > 0.0 ? 1.0 : 0.0;
    n0_ = n_ - static_cast<int>(kappa_.sum());
    p_ = model_.p();
    q_ = model_.q();
    r_ = model_.r();
  }

  int n() const { return n_; }
  int n0() const { return n0_; }
  int p() const { return p_; }
  int q() const { return q_; }
  int r() const { return r_; }
  int dim() const { return p_ + q_ + r_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& kappa() const { return kappa_; }

  Eigen::VectorXd beta(const Eigen::VectorXd& th) const { return th.segment(0, p_); }
  Eigen::VectorXd alpha(const Eigen::VectorXd& th) const { return th.segment(p_, q_); }
  Eigen::VectorXd gamma(const Eigen::VectorXd& th) const { return th.segment(p_ + q_, r_); }

  // Inverse-link images of the three predictors; valid only when every
  // mu_i, sigma_i is strictly positive and finite (nu is clamped into the
  // open interval).
  EvalState eval_params(const Eigen::VectorXd& theta) const {
    EvalState st;
    const Eigen::VectorXd eta = model_.mean.predictor.eval(data_, beta(theta));
    const Eigen::VectorXd tau = model_.precision.predictor.eval(data_, alpha(theta));
    st.mu.resize(n_);
    st.sigma.resize(n_);
    st.nu = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      st.mu[i] = model_.mean.link.inverse(eta[i]);
      st.sigma[i] = model_.precision.link.inverse(tau[i]);
      if (!(st.mu[i] > 0.0) || !std::isfinite(st.mu[i])) return st;
      if (!(st.sigma[i] > kSigmaFloor) || !std::isfinite(st.sigma[i])) return st;
    }
    if (model_.zeroprob) {
      const Eigen::VectorXd xi =
          model_.zeroprob->predictor.eval(data_, gamma(theta));
      for (int i = 0; i < n_; ++i) {
        double v = model_.zeroprob->link.inverse(xi[i]);
        if (!std::isfinite(v)) return st;
        st.nu[i] = std::clamp(v, kNuClamp, 1.0 - kNuClamp);
      }
    }
    st.valid = true;
    st.ll = loglik_at(st);
    return st;
  }

  // l(nu) + l(mu, sigma) with per-observation parameters.
  double loglik_at(const EvalState& st) const {
    double ll = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (model_.zeroprob) {
        ll += kappa_[i] == 0.0 ? std::log(st.nu[i]) : std::log1p(-st.nu[i]);
      }
      if (kappa_[i] == 0.0) continue;
      const double mu = st.mu[i];
      const double s = st.sigma[i];
      const double yi = y_[i];
      const double c = -0.5 * kLog16Pi + 0.5 * s - 0.5 * std::log(mu) +
                       0.5 * std::log(s + 1.0);
      ll += c - 1.5 * std::log(yi) - (s + 1.0) * yi / (4.0 * mu) -
            mu * s * s / (4.0 * (s + 1.0) * yi) +
            std::log(yi + mu * s / (s + 1.0));
    }
    return ll;
  }

  // First derivatives of the per-observation log-likelihood with respect
  // to mu_i, sigma_i, nu_i (the zero indicator is folded in).
  void first_derivatives(const EvalState& st, Eigen::VectorXd& dmu,
                         Eigen::VectorXd& dsig, Eigen::VectorXd& dnu) const {
    dmu.setZero(n_);
    dsig.setZero(n_);
    dnu.setZero(n_);
    for (int i = 0; i < n_; ++i) {
      const double mu = st.mu[i];
      const double s = st.sigma[i];
      const double s1 = s + 1.0;
      if (kappa_[i] != 0.0) {
        const double yi = y_[i];
        const double w = yi + mu * s / s1;  // y + beta
        const double ystar = s1 * yi / (4.0 * mu * mu) -
                             s * s / (4.0 * s1 * yi) + (s / s1) / w;
        const double mustar = 0.5 / mu;
        dmu[i] = ystar - mustar;
        const double ydot = (mu / (s1 * s1)) / w - yi / (4.0 * mu) -
                            mu * s * (s + 2.0) / (4.0 * s1 * s1 * yi);
        const double sigdot = -(s + 2.0) / (2.0 * s1);
        dsig[i] = ydot - sigdot;
      }
      if (model_.zeroprob) {
        const double nu = st.nu[i];
        dnu[i] = kappa_[i] == 0.0 ? 1.0 / nu : -1.0 / (1.0 - nu);
      }
    }
  }

  // Second derivatives d2l/dmu2, d2l/dmudsigma, d2l/dsigma2, d2l/dnu2.
  void second_derivatives(const EvalState& st, Eigen::VectorXd& dmumu,
                          Eigen::VectorXd& dmusig, Eigen::VectorXd& dsigsig,
                          Eigen::VectorXd& dnunu) const {
    dmumu.setZero(n_);
    dmusig.setZero(n_);
    dsigsig.setZero(n_);
    dnunu.setZero(n_);
    for (int i = 0; i < n_; ++i) {
      const double mu = st.mu[i];
      const double s = st.sigma[i];
      const double s1 = s + 1.0;
      if (kappa_[i] != 0.0) {
        const double yi = y_[i];
        const double den = s1 * yi + s * mu;  // (s+1)(y + beta)
        const double den2 = den * den;
        dmumu[i] = 0.5 / (mu * mu) - s * s / den2 -
                   yi * s1 / (2.0 * mu * mu * mu);
        dmusig[i] = yi / den2 + yi / (4.0 * mu * mu) -
                    s * (s + 2.0) / (4.0 * s1 * s1 * yi);
        const double ym = yi + mu;
        dsigsig[i] = 0.5 / (s1 * s1) - ym * ym / den2 -
                     mu / (2.0 * s1 * s1 * s1 * yi);
      }
      if (model_.zeroprob) {
        const double nu = st.nu[i];
        const double om = 1.0 - nu;
        dnunu[i] = kappa_[i] == 0.0 ? -1.0 / (nu * nu) : -1.0 / (om * om);
      }
    }
  }

  // Link weights a = 1/g1'(mu) etc. and their parameter derivatives
  // a' = da/dmu = -g''/g'^2.
  void link_weights(const EvalState& st, Eigen::VectorXd& a, Eigen::VectorXd& ap,
                    Eigen::VectorXd& b, Eigen::VectorXd& bp, Eigen::VectorXd& c,
                    Eigen::VectorXd& cp) const {
    a.resize(n_);
    ap.resize(n_);
    b.resize(n_);
    bp.resize(n_);
    c.setZero(n_);
    cp.setZero(n_);
    for (int i = 0; i < n_; ++i) {
      const double g1p = model_.mean.link.deriv(st.mu[i]);
      const double g1pp = model_.mean.link.deriv2(st.mu[i]);
      a[i] = 1.0 / g1p;
      ap[i] = -g1pp / (g1p * g1p);
      const double g2p = model_.precision.link.deriv(st.sigma[i]);
      const double g2pp = model_.precision.link.deriv2(st.sigma[i]);
      b[i] = 1.0 / g2p;
      bp[i] = -g2pp / (g2p * g2p);
      if (model_.zeroprob) {
        const double g3p = model_.zeroprob->link.deriv(st.nu[i]);
        const double g3pp = model_.zeroprob->link.deriv2(st.nu[i]);
        c[i] = 1.0 / g3p;
        cp[i] = -g3pp / (g3p * g3p);
      }
    }
  }

  Eigen::MatrixXd jac_mean(const Eigen::VectorXd& theta) const {
    return model_.mean.predictor.jacobian(data_, beta(theta));
  }
  Eigen::MatrixXd jac_prec(const Eigen::VectorXd& theta) const {
    return model_.precision.predictor.jacobian(data_, alpha(theta));
  }
  Eigen::MatrixXd jac_zero(const Eigen::VectorXd& theta) const {
    if (!model_.zeroprob) return Eigen::MatrixXd(n_, 0);
    return model_.zeroprob->predictor.jacobian(data_, gamma(theta));
  }

  Eigen::VectorXd score_at(const Eigen::VectorXd& theta,
                           const EvalState& st) const {
    Eigen::VectorXd dmu, dsig, dnu, a, ap, b, bp, c, cp;
    first_derivatives(st, dmu, dsig, dnu);
    link_weights(st, a, ap, b, bp, c, cp);
    Eigen::VectorXd u(dim());
    u.segment(0, p_) = jac_mean(theta).transpose() * (a.cwiseProduct(dmu));
    u.segment(p_, q_) = jac_prec(theta).transpose() * (b.cwiseProduct(dsig));
    if (r_ > 0) {
      u.segment(p_ + q_, r_) =
          jac_zero(theta).transpose() * (c.cwiseProduct(dnu));
    }
    return u;
  }

  Eigen::MatrixXd hessian_at(const Eigen::VectorXd& theta,
                             const EvalState& st) const {
    Eigen::VectorXd dmu, dsig, dnu, a, ap, b, bp, c, cp;
    Eigen::VectorXd dmumu, dmusig, dsigsig, dnunu;
    first_derivatives(st, dmu, dsig, dnu);
    second_derivatives(st, dmumu, dmusig, dsigsig, dnunu);
    link_weights(st, a, ap, b, bp, c, cp);

    const Eigen::MatrixXd X = jac_mean(theta);
    const Eigen::MatrixXd Z = jac_prec(theta);
    const Eigen::MatrixXd W = jac_zero(theta);

    // Observation weights from the chain rule in eta/tau/xi.
    const Eigen::VectorXd d =
        (dmumu.cwiseProduct(a) + dmu.cwiseProduct(ap)).cwiseProduct(a);
    const Eigen::VectorXd m = dmusig.cwiseProduct(a).cwiseProduct(b);
    const Eigen::VectorXd e =
        (dsigsig.cwiseProduct(b) + dsig.cwiseProduct(bp)).cwiseProduct(b);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim(), dim());
    H.block(0, 0, p_, p_) = X.transpose() * d.asDiagonal() * X +
                            model_.mean.predictor.curvature(
                                data_, beta(theta), a.cwiseProduct(dmu));
    H.block(0, p_, p_, q_) = X.transpose() * m.asDiagonal() * Z;
    H.block(p_, 0, q_, p_) = H.block(0, p_, p_, q_).transpose();
    H.block(p_, p_, q_, q_) = Z.transpose() * e.asDiagonal() * Z +
                              model_.precision.predictor.curvature(
                                  data_, alpha(theta), b.cwiseProduct(dsig));
    if (r_ > 0) {
      const Eigen::VectorXd o =
          (dnunu.cwiseProduct(c) + dnu.cwiseProduct(cp)).cwiseProduct(c);
      H.block(p_ + q_, p_ + q_, r_, r_) =
          W.transpose() * o.asDiagonal() * W +
          model_.zeroprob->predictor.curvature(data_, gamma(theta),
                                               c.cwiseProduct(dnu));
    }
    return H;
  }

  // Expected information. The lambda cache is per call; constant-precision
  // fits cost one quadrature here.
  Eigen::MatrixXd fisher_at(const Eigen::VectorXd& theta,
                            const EvalState& st) const {
    Eigen::VectorXd a, ap, b, bp, c, cp;
    link_weights(st, a, ap, b, bp, c, cp);
    LambdaCache lambda(lambda_rel_tol_);

    Eigen::VectorXd Ed(n_), Em(n_), Ee(n_), Eo(n_);
    for (int i = 0; i < n_; ++i) {
      const double mu = st.mu[i];
      const double s = st.sigma[i];
      const double s1 = s + 1.0;
      const double nu = model_.zeroprob ? st.nu[i] : 0.0;
      const double om = 1.0 - nu;
      const double lam = lambda(mu, s);
      Ed[i] = om * (s / (2.0 * mu * mu) + s * s * lam / (s1 * s1)) * a[i] * a[i];
      Em[i] = om * (1.0 / (2.0 * mu * s1) + s * mu * lam / (s1 * s1 * s1)) *
              a[i] * b[i];
      Ee[i] = om *
              ((s * s + 3.0 * s + 1.0) / (2.0 * s * s * s1 * s1) +
               mu * mu * lam / (s1 * s1 * s1 * s1)) *
              b[i] * b[i];
      Eo[i] = model_.zeroprob ? c[i] * c[i] / (nu * om) : 0.0;
    }

    const Eigen::MatrixXd X = jac_mean(theta);
    const Eigen::MatrixXd Z = jac_prec(theta);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim(), dim());
    info.block(0, 0, p_, p_) = X.transpose() * Ed.asDiagonal() * X;
    info.block(0, p_, p_, q_) = X.transpose() * Em.asDiagonal() * Z;
    info.block(p_, 0, q_, p_) = info.block(0, p_, p_, q_).transpose();
    info.block(p_, p_, q_, q_) = Z.transpose() * Ee.asDiagonal() * Z;
    if (r_ > 0) {
      const Eigen::MatrixXd W = jac_zero(theta);
      info.block(p_ + q_, p_ + q_, r_, r_) =
          W.transpose() * Eo.asDiagonal() * W;
    }
    return info;
  }

  const ModelSpec& model() const { return model_; }
  const Dataset& data() const { return data_; }

 private:
  const ModelSpec& model_;
  const Dataset& data_;
  Eigen::VectorXd y_;
  Eigen::VectorXd kappa_;
  double lambda_rel_tol_;
  int n_ = 0, n0_ = 0, p_ = 0, q_ = 0, r_ = 0;
};

// Solves info * x = rhs block-separately ((beta,alpha) and gamma decouple).
// Falls back to a spectral pseudo-inverse when a block is near-singular.
Eigen::VectorXd solve_blockwise(const Eigen::MatrixXd& info,
                                const Eigen::VectorXd& rhs, int pq, int r,
                                std::vector<std::string>* warnings) {
  Eigen::VectorXd x(rhs.size());
  auto solve_block = [&](int off, int k, const char* label) {
    if (k == 0) return;
    const Eigen::MatrixXd A = info.block(off, off, k, k);
    const Eigen::VectorXd b = rhs.segment(off, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double tr = A.trace();
    if (es.eigenvalues().minCoeff() < 1e-12 * tr) {
      if (warnings) {
        warnings->push_back(std::string("near-singular information in ") +
                            label + " block; pseudo-inverse used");
      }
      Eigen::VectorXd inv = es.eigenvalues();
      for (int j = 0; j < k; ++j) {
        inv[j] = inv[j] > 1e-12 * tr ? 1.0 / inv[j] : 0.0;
      }
      x.segment(off, k) = es.eigenvectors() * inv.asDiagonal() *
                          es.eigenvectors().transpose() * b;
    } else {
      x.segment(off, k) = A.ldlt().solve(b);
    }
  };
  solve_block(0, pq, "mean/precision");
  solve_block(pq, r, "zero-probability");
  return x;
}

Eigen::MatrixXd invert_blockwise(const Eigen::MatrixXd& info, int pq, int r,
                                 std::vector<std::string>* warnings) {
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(info.rows(), info.cols());
  auto invert_block = [&](int off, int k, const char* label) {
    if (k == 0) return;
    const Eigen::MatrixXd A = info.block(off, off, k, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double tr = A.trace();
    if (es.eigenvalues().minCoeff() < 1e-12 * tr) {
      if (warnings) {
        warnings->push_back(std::string("near-singular information in ") +
                            label + " block; pseudo-inverse used");
      }
      Eigen::VectorXd d = es.eigenvalues();
      for (int j = 0; j < k; ++j) d[j] = d[j] > 1e-12 * tr ? 1.0 / d[j] : 0.0;
      inv.block(off, off, k, k) =
          es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
    } else {
      inv.block(off, off, k, k) =
          A.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    }
  };
  invert_block(0, pq, "mean/precision");
  invert_block(pq, r, "zero-probability");
  return inv;
}

void check_rank(const Eigen::MatrixXd& J, const char* label) {
  if (J.cols() == 0) return;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * sv(0)) {
    throw NumericError(std::string("rank-deficient derivative matrix in ") +
                       label + " block");
  }
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b) {
  return A.colPivHouseholderQr().solve(b);
}

// Method-of-moments precision from the coefficient of variation of the
// positive part: CV^2 = (2s+5)/(s+1)^2 solved for s, floored at 0.1.
double sigma_from_cv2(double cv2) {
  if (!(cv2 > 0.0) || !std::isfinite(cv2)) return 1.0;
  const double s = (1.0 - cv2 + std::sqrt(3.0 * cv2 + 1.0)) / cv2;
  return std::max(0.1, s);
}

Eigen::VectorXd starting_values(const ModelSpec& model, const Dataset& data) {
  const int n = data.n();
  const Eigen::VectorXd y = data.cells.col(model.response_column);
  std::vector<int> pos;
  for (int i = 0; i < n; ++i) {
    if (y[i] > 0.0) pos.push_back(i);
  }
  const int np = static_cast<int>(pos.size());

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.dim());

  // beta: least squares of g1(y) on the mean design over positive rows;
  // the builtin nonlinear form is log-linearized instead.
  {
    const auto& pred = model.mean.predictor;
    Eigen::VectorXd beta0;
    if (pred.kind == PredictorKind::Linear) {
      Eigen::MatrixXd A(np, pred.n_params());
      Eigen::VectorXd bvec(np);
      for (int k = 0; k < np; ++k) {
        const int i = pos[k];
        int j = 0;
        if (pred.intercept) A(k, j++) = 1.0;
        for (int ccol : pred.columns) A(k, j++) = data.cells(i, ccol);
        bvec[k] = model.mean.link.eval(y[i]);
      }
      beta0 = least_squares(A, bvec);
    } else if (pred.kind == PredictorKind::ExpRatio) {
      Eigen::MatrixXd A(np, 2);
      Eigen::VectorXd bvec(np);
      for (int k = 0; k < np; ++k) {
        const int i = pos[k];
        A(k, 0) = 1.0;
        A(k, 1) = 1.0 / data.cells(i, pred.columns[0]);
        bvec[k] = std::log(y[i]);
      }
      const Eigen::VectorXd c = least_squares(A, bvec);
      beta0.resize(2);
      beta0[0] = std::exp(c[0]);
      beta0[1] = c[1];
    } else {
      beta0 = Eigen::VectorXd::Ones(pred.n_params());
    }
    theta.segment(0, model.p()) = beta0;
  }

  // alpha: constant-precision start from the method of moments.
  {
    double mean = 0.0, var = 0.0;
    for (int i : pos) mean += y[i];
    mean /= np;
    for (int i : pos) var += (y[i] - mean) * (y[i] - mean);
    var /= std::max(1, np - 1);
    const double sigma0 = sigma_from_cv2(var / (mean * mean));
    const auto& pred = model.precision.predictor;
    if (pred.kind == PredictorKind::Linear) {
      Eigen::MatrixXd A(n, pred.n_params());
      for (int i = 0; i < n; ++i) {
        int j = 0;
        if (pred.intercept) A(i, j++) = 1.0;
        for (int ccol : pred.columns) A(i, j++) = data.cells(i, ccol);
      }
      theta.segment(model.p(), model.q()) = least_squares(
          A, Eigen::VectorXd::Constant(n, model.precision.link.eval(sigma0)));
    } else {
      theta.segment(model.p(), model.q()) =
          Eigen::VectorXd::Ones(model.q());
    }
  }

  // gamma: push the raw zero fraction through g3.
  if (model.zeroprob) {
    const double n0 = static_cast<double>(n - np);
    double frac = n0 / n;
    frac = std::clamp(frac, 1.0 / (2.0 * n), 1.0 - 1.0 / (2.0 * n));
    const auto& pred = model.zeroprob->predictor;
    if (pred.kind == PredictorKind::Linear) {
      Eigen::MatrixXd A(n, pred.n_params());
      for (int i = 0; i < n; ++i) {
        int j = 0;
        if (pred.intercept) A(i, j++) = 1.0;
        for (int ccol : pred.columns) A(i, j++) = data.cells(i, ccol);
      }
      theta.segment(model.p() + model.q(), model.r()) = least_squares(
          A, Eigen::VectorXd::Constant(n, model.zeroprob->link.eval(frac)));
    } else {
      theta.segment(model.p() + model.q(), model.r()) =
          Eigen::VectorXd::Ones(model.r());
    }
  }
  return theta;
}

}  // namespace

double lambda_integral(double mu, double sigma, double rel_tol) {
  const RbsParams p(mu, sigma);  // validates
  const double beta = sigma * mu / (sigma + 1.0);
  auto f = [&](double t) {
    const double d = t + beta;
    return std::exp(rbs_logpdf(t, p)) / (d * d);
  };
  const auto q = integrate_half_line(f, rel_tol);
  if (!q.converged) {
    throw NumericError("lambda quadrature failed: error " +
                       std::to_string(q.abs_error) + " after " +
                       std::to_string(q.subdivisions) + " subdivisions");
  }
  return q.value;
}

double loglik(const ModelSpec& model, const Dataset& data,
              const Eigen::VectorXd& theta) {
  Evaluator ev(model, data, 1e-9);
  const EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    throw NumericError("loglik: parameter image outside the valid region");
  }
  return st.ll;
}

Eigen::VectorXd score(const ModelSpec& model, const Dataset& data,
                      const Eigen::VectorXd& theta) {
  Evaluator ev(model, data, 1e-9);
  const EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    throw NumericError("score: parameter image outside the valid region");
  }
  return ev.score_at(theta, st);
}

Eigen::MatrixXd hessian(const ModelSpec& model, const Dataset& data,
                        const Eigen::VectorXd& theta) {
  Evaluator ev(model, data, 1e-9);
  const EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    throw NumericError("hessian: parameter image outside the valid region");
  }
  return ev.hessian_at(theta, st);
}

Eigen::MatrixXd fisher_information(const ModelSpec& model, const Dataset& data,
                                   const Eigen::VectorXd& theta,
                                   double lambda_rel_tol) {
  Evaluator ev(model, data, lambda_rel_tol);
  const EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    throw NumericError("fisher_information: parameter image outside the valid region");
  }
  return ev.fisher_at(theta, st);
}

ObsComponents observation_components(const ModelSpec& model,
                                     const Dataset& data,
                                     const Eigen::VectorXd& theta) {
  Evaluator ev(model, data, 1e-9);
  const EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    throw NumericError("observation_components: parameter image outside the valid region");
  }
  ObsComponents oc;
  oc.mu = st.mu;
  oc.sigma = st.sigma;
  oc.nu = st.nu;
  Eigen::VectorXd ap, bp, cp;
  ev.first_derivatives(st, oc.dmu, oc.dsigma, oc.dnu);
  ev.link_weights(st, oc.a, ap, oc.b, bp, oc.c, cp);
  oc.X = ev.jac_mean(theta);
  oc.Z = ev.jac_prec(theta);
  oc.W = ev.jac_zero(theta);
  return oc;
}

FitResult fit(const ModelSpec& model, const Dataset& data,
              const FitOptions& options) {
  model.validate(data);
  Evaluator ev(model, data, options.lambda_rel_tol);

  FitResult result;
  result.n = ev.n();
  result.n0 = ev.n0();
  result.p = ev.p();
  result.q = ev.q();
  result.r = ev.r();
  result.param_names = model.param_names(data);
  result.param_blocks = model.param_blocks();

  if (ev.n0() == 0 && model.zeroprob) {
    result.warnings.push_back(
        "no zero responses but a zero-probability part is present; "
        "its estimate runs to the boundary");
  }

  Eigen::VectorXd theta = options.warm_start && options.theta0.size() == ev.dim()
                              ? options.theta0
                              : starting_values(model, data);
  EvalState st = ev.eval_params(theta);
  if (!st.valid) {
    // Conservative fallback when the data-driven start is out of range.
    theta.setZero();
    st = ev.eval_params(theta);
    if (!st.valid) {
      throw NumericError("fit: no valid starting point found");
    }
  }

  result.trace.push_back({0, st.ll, 1.0, theta});

  bool converged = false;
  double score_max = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (iter = 1; iter <= options.max_iter; ++iter) {
    check_rank(ev.jac_mean(theta), "mean");
    check_rank(ev.jac_prec(theta), "precision");
    if (ev.r() > 0) check_rank(ev.jac_zero(theta), "zeroprob");

    const Eigen::VectorXd u = ev.score_at(theta, st);
    score_max = u.cwiseAbs().maxCoeff();

    const Eigen::MatrixXd info = ev.fisher_at(theta, st);
    const Eigen::VectorXd delta = solve_blockwise(
        info, u, ev.p() + ev.q(), ev.r(), &result.warnings);

    // Step halving keeps the iterate valid and the likelihood monotone.
    double step = 1.0;
    EvalState next;
    bool accepted = false;
    for (int h = 0; h <= options.max_step_halvings; ++h) {
      next = ev.eval_params(theta + step * delta);
      if (next.valid && next.ll >= st.ll - 1e-12) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // The scoring direction cannot improve the likelihood any further;
      // treat as converged when the score is already at tolerance.
      if (score_max < options.tol_score) converged = true;
      break;
    }

    const double rel_change =
        std::fabs(next.ll - st.ll) / (std::fabs(st.ll) + 1.0);
    theta += step * delta;
    st = next;
    result.trace.push_back({iter, st.ll, step, theta});

    const double new_score_max =
        ev.score_at(theta, st).cwiseAbs().maxCoeff();
    score_max = new_score_max;
    if (new_score_max < options.tol_score &&
        rel_change < options.tol_loglik_rel) {
      converged = true;
      break;
    }
  }

  result.theta = theta;
  result.loglik = st.ll;
  result.aic = -2.0 * st.ll + 2.0 * ev.dim();
  result.converged = converged;
  result.iterations = std::min(iter, options.max_iter);
  result.score_max_abs = score_max;
  result.mu = st.mu;
  result.sigma = st.sigma;
  result.nu = st.nu;
  result.inverse_information = invert_blockwise(
      ev.fisher_at(theta, st), ev.p() + ev.q(), ev.r(), &result.warnings);

  if (!converged) {
    throw FitNonConvergence(
        "Fisher scoring did not converge after " +
        std::to_string(result.iterations) +
        " iterations (max |score| = " + std::to_string(score_max) + ")",
        result);
  }
  return result;
}

std::vector<InferenceRow> wald_inference(const FitResult& fit, double level) {
  if (!fit.converged) {
    throw NonConvergence("wald_inference: fit did not converge");
  }
  if (!(level >= 0.0 && level < 1.0)) {
    throw ConfigError("wald_inference: level must lie in [0,1)");
  }
  const double zq =
      level == 0.0 ? 0.0 : norm_quantile(0.5 + 0.5 * level);
  std::vector<InferenceRow> rows;
  for (int k = 0; k < fit.theta.size(); ++k) {
    InferenceRow row;
    row.block = fit.param_blocks[k];
    row.name = fit.param_names[k];
    row.estimate = fit.theta[k];
    row.se = std::sqrt(std::max(0.0, fit.inverse_information(k, k)));
    row.z = row.se > 0.0 ? row.estimate / row.se
                         : std::numeric_limits<double>::quiet_NaN();
    row.p_value = row.se > 0.0 ? 2.0 * norm_cdf(-std::fabs(row.z))
                               : std::numeric_limits<double>::quiet_NaN();
    row.ci_lo = row.estimate - zq * row.se;
    row.ci_hi = row.estimate + zq * row.se;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace zabs
