#pragma once

// Least squares: the log-log scaling fit, its prediction envelope, and the
// feature residualization / standardization used by the mixed model.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "wattbench/error.hpp"
#include "wattbench/stats.hpp"

namespace wattbench::analysis {

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  double rss = 0;
};

/// Throws DomainError when X is rank deficient.
inline OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw DomainError("ols: X and y disagree in length");
  if (X.rows() < X.cols()) throw DomainError("ols: fewer observations than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) throw DomainError("ols: design matrix is rank deficient");
  OlsResult r;
  r.coef = qr.solve(y);
  r.residuals = y - X * r.coef;
  r.rss = r.residuals.squaredNorm();
  return r;
}

// ---------------------------------------------------------------------------
// log(E) = alpha * log(size) + beta

struct LogLogFit {
  double alpha = 0;
  double beta = 0;
  int n = 0;
  double residual_var = 0;  // rss / (n - 2)
  double x_mean = 0;        // mean log(size)
  double sxx = 0;

  double predict_log(double size) const { return beta + alpha * std::log(size); }
};

struct SizeEnergyPoint {
  double size = 0;    // active parameters (billions)
  double energy = 0;  // energy per token (J)
};

inline LogLogFit fit_loglog(std::span<const SizeEnergyPoint> points) {
  if (points.size() < 3) throw DomainError("fit_loglog: need at least 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    if (!(p.size > 0) || !(p.energy > 0)) throw DomainError("fit_loglog: sizes and energies must be > 0");
    sx += std::log(p.size);
    sy += std::log(p.energy);
  }
  LogLogFit f;
  f.n = static_cast<int>(points.size());
  f.x_mean = sx / n;
  const double y_mean = sy / n;
  double sxy = 0;
  for (const auto& p : points) {
    const double dx = std::log(p.size) - f.x_mean;
    f.sxx += dx * dx;
    sxy += dx * (std::log(p.energy) - y_mean);
  }
  if (!(f.sxx > 1e-12 * n)) throw DomainError("fit_loglog: all sizes are equal");
  f.alpha = sxy / f.sxx;
  f.beta = y_mean - f.alpha * f.x_mean;
  double rss = 0;
  for (const auto& p : points) {
    const double e = std::log(p.energy) - f.predict_log(p.size);
    rss += e * e;
  }
  f.residual_var = f.n > 2 ? rss / (n - 2) : 0.0;
  return f;
}

/// Pointwise prediction interval for a new observation at `size`, returned
/// in energy units: exp(yhat -/+ t_{n-2} s sqrt(1 + 1/n + (x - xbar)^2 / Sxx)).
inline std::pair<double, double> prediction_interval(const LogLogFit& fit, double size, double level = 0.95) {
  if (fit.n < 4) throw DomainError("prediction_interval: need n >= 4");
  if (!(size > 0)) throw DomainError("prediction_interval: size must be > 0");
  if (!(level > 0 && level < 1)) throw DomainError("prediction_interval: level must be in (0, 1)");
  const double x = std::log(size);
  const double t = stats::student_t_quantile(fit.n - 2, 0.5 + level / 2);
  const double half = t * std::sqrt(fit.residual_var) *
                      std::sqrt(1.0 + 1.0 / fit.n + (x - fit.x_mean) * (x - fit.x_mean) / fit.sxx);
  const double yhat = fit.predict_log(size);
  return {std::exp(yhat - half), std::exp(yhat + half)};
}

/// Indices of points outside their own prediction interval.
inline std::vector<std::size_t> flag_outliers(std::span<const SizeEnergyPoint> points, const LogLogFit& fit,
                                              double level = 0.95) {
  std::vector<std::size_t> out;
  // Compare in log space; exp() round trips would flag on-line points of a
  // zero-variance fit.
  if (fit.n < 4) throw DomainError("flag_outliers: need n >= 4");
  const double t = stats::student_t_quantile(fit.n - 2, 0.5 + level / 2);
  const double s = std::sqrt(fit.residual_var);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = std::log(points[i].size);
    const double half = t * s * std::sqrt(1.0 + 1.0 / fit.n + (x - fit.x_mean) * (x - fit.x_mean) / fit.sxx);
    const double resid = std::log(points[i].energy) - fit.predict_log(points[i].size);
    if (std::abs(resid) > half + 1e-12) out.push_back(i);
  }
  return out;
}

inline double scaling_multiplier(double alpha, double factor) {
  if (!(factor > 0)) throw DomainError("scaling_multiplier: factor must be > 0");
  return std::pow(factor, alpha);
}

/// OLS residuals of z on [1, log_params]: the part of z not explained by size.
inline std::vector<double> residualize(std::span<const double> z, std::span<const double> log_params) {
  if (z.size() != log_params.size()) throw DomainError("residualize: length mismatch");
  if (z.size() < 3) throw DomainError("residualize: need at least 3 values");
  const auto n = static_cast<Eigen::Index>(z.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = log_params[i];
    y(i) = z[i];
  }
  const auto fit = ols(X, y);
  return {fit.residuals.data(), fit.residuals.data() + n};
}

/// z-scores with the sample (n - 1) standard deviation.
inline std::vector<double> standardize(std::span<const double> v) {
  if (v.size() < 2) throw DomainError("standardize: need at least 2 values");
  const double m = stats::mean(v);
  const double sd = stats::sample_sd(v);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) throw DomainError("standardize: zero variance");
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back((x - m) / sd);
  return out;
}

}  // namespace wattbench::analysis
