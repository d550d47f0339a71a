#pragma once

// Random-intercept linear mixed model, y = X b + u_g + e, fitted by
// profiled REML over the variance ratio theta = var(u) / var(e).
//
// For a fixed theta, V = I + theta * blockdiag(1 1^T) has the closed-form
// inverse V_g^-1 = I - c_g 1 1^T with c_g = theta / (1 + theta n_g), and
// log|V| = sum_g log(1 + theta n_g), so every evaluation is O(n p^2).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wattbench/error.hpp"
#include "wattbench/stats.hpp"

namespace wattbench::analysis {

struct FixedEffect {
  std::string name;
  double coef = 0;
  double std_err = 0;
  double z = 0;
  double p = 1;
  double ci_lo = 0;
  double ci_hi = 0;
};

struct MixedModelFit {
  std::vector<FixedEffect> terms;
  double group_var = 0;
  double residual_var = 0;
  double reml_loglik = 0;
  double theta = 0;
  double log_theta = 0;     // optimizer position; theta is 0 at the lower boundary
  bool boundary = false;
  int n_obs = 0;
  int n_groups = 0;

  const FixedEffect& term(const std::string& name) const {
    for (const auto& t : terms)
      if (t.name == name) return t;
    throw DomainError("mixed model: no term named " + name);
  }
};

struct LmmOptions {
  double log_theta_lo = -12;
  double log_theta_hi = 6;
  double grid_step = 0.05;
  double tol = 1e-10;
  std::optional<double> fixed_theta;  // skip the search; 0 reproduces OLS
};

namespace lmm_detail {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<int> group;  // dense ids 0..G-1
  std::vector<int> size;   // rows per group
  int G = 0;
};

struct Eval {
  double loglik = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
  Eigen::MatrixXd xtvx_inv;
  double sigma2 = 0;
};

inline Eval evaluate(const Problem& pr, double theta) {
  const auto n = pr.X.rows();
  const auto p = pr.X.cols();
  std::vector<double> c(pr.G);
  double logdet_v = 0;
  for (int g = 0; g < pr.G; ++g) {
    c[g] = theta / (1.0 + theta * pr.size[g]);
    logdet_v += std::log1p(theta * pr.size[g]);
  }
  // Group column sums of X and y.
  Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(pr.G, p);
  Eigen::VectorXd sy = Eigen::VectorXd::Zero(pr.G);
  for (Eigen::Index i = 0; i < n; ++i) {
    sx.row(pr.group[i]) += pr.X.row(i);
    sy(pr.group[i]) += pr.y(i);
  }
  Eigen::MatrixXd xtvx = pr.X.transpose() * pr.X;
  Eigen::VectorXd xtvy = pr.X.transpose() * pr.y;
  for (int g = 0; g < pr.G; ++g) {
    xtvx -= c[g] * sx.row(g).transpose() * sx.row(g);
    xtvy -= c[g] * sx.row(g).transpose() * sy(g);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(xtvx);
  Eval e;
  if (llt.info() != Eigen::Success) return e;
  e.beta = llt.solve(xtvy);
  const Eigen::VectorXd r = pr.y - pr.X * e.beta;
  Eigen::VectorXd sr = Eigen::VectorXd::Zero(pr.G);
  for (Eigen::Index i = 0; i < n; ++i) sr(pr.group[i]) += r(i);
  double rvr = r.squaredNorm();
  for (int g = 0; g < pr.G; ++g) rvr -= c[g] * sr(g) * sr(g);
  const double dof = static_cast<double>(n - p);
  e.sigma2 = std::max(rvr, 0.0) / dof;
  double logdet_xtvx = 0;
  for (Eigen::Index k = 0; k < p; ++k) logdet_xtvx += 2.0 * std::log(llt.matrixL()(k, k));
  e.xtvx_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  if (e.sigma2 > 0)
    e.loglik = -0.5 * (dof * (1.0 + std::log(2.0 * std::numbers::pi * e.sigma2)) + logdet_v + logdet_xtvx);
  return e;
}

}  // namespace lmm_detail

/// Profiled REML log-likelihood at theta (for oracles and diagnostics).
inline double reml_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& group_ids,
                          double theta) {
  lmm_detail::Problem pr{X, y, group_ids, {}, 0};
  pr.G = group_ids.empty() ? 0 : *std::max_element(group_ids.begin(), group_ids.end()) + 1;
  pr.size.assign(pr.G, 0);
  for (int g : group_ids) ++pr.size[g];
  return lmm_detail::evaluate(pr, theta).loglik;
}

/// Dense group ids in order of first appearance of the sorted label set.
inline std::vector<int> group_ids(const std::vector<std::string>& labels) {
  std::map<std::string, int> ids;
  for (const auto& l : labels) ids.emplace(l, 0);
  int k = 0;
  for (auto& [_, v] : ids) v = k++;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(ids.at(l));
  return out;
}

inline MixedModelFit fit_lmm_reml(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                  const std::vector<std::string>& groups, const std::vector<std::string>& names,
                                  const LmmOptions& opt = {}) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n || static_cast<Eigen::Index>(groups.size()) != n)
    throw DomainError("fit_lmm_reml: y, X and groups disagree in length");
  if (static_cast<Eigen::Index>(names.size()) != p) throw DomainError("fit_lmm_reml: one name per column required");
  if (n <= p + 1) throw DomainError("fit_lmm_reml: need more observations than fixed terms + 1");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw DomainError("fit_lmm_reml: design matrix is rank deficient");

  lmm_detail::Problem pr{X, y, group_ids(groups), {}, 0};
  pr.G = *std::max_element(pr.group.begin(), pr.group.end()) + 1;
  if (pr.G < 2) throw DomainError("fit_lmm_reml: need at least 2 groups");
  pr.size.assign(pr.G, 0);
  for (int g : pr.group) ++pr.size[g];

  MixedModelFit fit;
  fit.n_obs = static_cast<int>(n);
  fit.n_groups = pr.G;

  // A perfect fit has no residual variance to profile; report it directly.
  const auto at_zero = lmm_detail::evaluate(pr, 0.0);
  const double scale = std::max(1.0, pr.y.squaredNorm());
  const bool exact = at_zero.sigma2 * static_cast<double>(n - p) <= 1e-24 * scale;
  const Eigen::VectorXd beta_exact = exact ? Eigen::VectorXd(qr.solve(y)) : Eigen::VectorXd();

  double theta = 0, log_theta = opt.log_theta_lo;
  bool boundary = false;
  if (exact) {
    boundary = true;
  } else if (opt.fixed_theta) {
    if (!(*opt.fixed_theta >= 0)) throw DomainError("fit_lmm_reml: fixed theta must be >= 0");
    theta = *opt.fixed_theta;
    log_theta = theta > 0 ? std::log(theta) : opt.log_theta_lo;
    boundary = theta == 0;
  } else {
    auto f = [&](double t) { return lmm_detail::evaluate(pr, std::exp(t)).loglik; };
    const int steps = static_cast<int>(std::ceil((opt.log_theta_hi - opt.log_theta_lo) / opt.grid_step));
    int best = -1;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
      const double t = std::min(opt.log_theta_lo + i * opt.grid_step, opt.log_theta_hi);
      const double v = f(t);
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    if (best < 0) throw DomainError("fit_lmm_reml: REML criterion is not finite anywhere on the search interval");
    // Golden-section refinement on the bracket around the best grid point.
    double a = std::max(opt.log_theta_lo, opt.log_theta_lo + (best - 1) * opt.grid_step);
    double b = std::min(opt.log_theta_hi, opt.log_theta_lo + (best + 1) * opt.grid_step);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    int iter = 0;
    while (b - a > opt.tol) {
      if (++iter > 500) throw DomainError("fit_lmm_reml: 1-D search did not converge");
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = f(d);
      }
    }
    log_theta = 0.5 * (a + b);
    double v = f(log_theta);
    // Endpoints of the bracket are candidates too (monotone criterion).
    for (double t : {a, b, opt.log_theta_lo + best * opt.grid_step}) {
      t = std::clamp(t, opt.log_theta_lo, opt.log_theta_hi);
      if (const double ft = f(t); ft > v) {
        v = ft;
        log_theta = t;
      }
    }
    boundary = log_theta <= opt.log_theta_lo + opt.tol;
    theta = boundary ? 0.0 : std::exp(log_theta);
  }

  const auto ev = lmm_detail::evaluate(pr, theta);
  fit.theta = theta;
  fit.log_theta = log_theta;
  fit.boundary = boundary;
  fit.residual_var = exact ? 0.0 : ev.sigma2;
  fit.group_var = theta * fit.residual_var;
  fit.reml_loglik = exact ? std::numeric_limits<double>::infinity() : ev.loglik;
  const double zq = stats::normal_quantile(0.975);
  for (Eigen::Index k = 0; k < p; ++k) {
    FixedEffect t;
    t.name = names[k];
    t.coef = exact ? beta_exact(k) : ev.beta(k);
    t.std_err = exact ? 0.0 : std::sqrt(ev.sigma2 * ev.xtvx_inv(k, k));
    if (t.std_err > 0) {
      t.z = t.coef / t.std_err;
    } else {
      t.z = t.coef == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), t.coef);
    }
    t.p = stats::two_sided_p(t.z);
    t.ci_lo = t.coef - zq * t.std_err;
    t.ci_hi = t.coef + zq * t.std_err;
    fit.terms.push_back(t);
  }
  return fit;
}

}  // namespace wattbench::analysis
