#include <gtest/gtest.h>

#include "lmm_fixtures.hpp"
#include "oracles/reml_grid.hpp"
#include "support.hpp"

using namespace wattbench;
using namespace wattbench::analysis;

TEST(Lmm, ZeroNoiseRecoversBetaExactly) {
  auto d = fixtures::random_intercept_data(1, 4, 6, 0, 0, 0, 0);
  d.y = d.X * Eigen::Vector2d(-1.0, 0.25);
  const auto fit = fit_lmm_reml(d.y, d.X, d.groups, {"Intercept", "x"});
  EXPECT_NEAR(fit.term("Intercept").coef, -1.0, 1e-12);
  EXPECT_NEAR(fit.term("x").coef, 0.25, 1e-12);
  EXPECT_LE(fit.group_var, 1e-8);
  EXPECT_EQ(fit.n_obs, 24);
  EXPECT_EQ(fit.n_groups, 4);
}

TEST(Lmm, GroupVarFixedAtZeroReducesToOls) {
  const auto d = fixtures::random_intercept_data(2, 6, 8, 1.0, -0.5, 0.4, 0.2);
  LmmOptions opt;
  opt.fixed_theta = 0.0;
  const auto fit = fit_lmm_reml(d.y, d.X, d.groups, {"Intercept", "x"}, opt);
  const auto o = ols(d.X, d.y);
  EXPECT_NEAR(fit.terms[0].coef, o.coef(0), 1e-8);
  EXPECT_NEAR(fit.terms[1].coef, o.coef(1), 1e-8);
  EXPECT_DOUBLE_EQ(fit.group_var, 0);
  const double s2 = o.rss / (48 - 2);
  EXPECT_NEAR(fit.residual_var, s2, 1e-10);
  const Eigen::MatrixXd cov = s2 * (d.X.transpose() * d.X).inverse();
  EXPECT_NEAR(fit.terms[1].std_err, std::sqrt(cov(1, 1)), 1e-10);
}

TEST(Lmm, WaldStatistics) {
  const auto d = fixtures::random_intercept_data(3, 8, 10, -1.0, 0.25, 0.27, 0.3);
  const auto fit = fit_lmm_reml(d.y, d.X, d.groups, {"Intercept", "x"});
  for (const auto& t : fit.terms) {
    EXPECT_GT(t.std_err, 0);
    EXPECT_NEAR(t.z, t.coef / t.std_err, 1e-12);
    EXPECT_NEAR(t.p, 2 * stats::normal_cdf(-std::abs(t.z)), 1e-12);
    EXPECT_LE(t.ci_lo, t.coef);
    EXPECT_GE(t.ci_hi, t.coef);
    EXPECT_NEAR(t.ci_hi - t.coef, stats::normal_quantile(0.975) * t.std_err, 1e-12);
  }
  EXPECT_GT(fit.group_var, 0);
  EXPECT_NEAR(fit.group_var, fit.theta * fit.residual_var, 1e-12);
  EXPECT_NEAR(fit.reml_loglik, oracle::reml_dense(d.X, d.y, d.ids, fit.theta), 1e-8);
}

TEST(Lmm, ThetaMatchesDenseGridOracle) {
  // n = 50 fixtures spanning strong, weak and absent group effects.
  const double sus[] = {0.6, 0.27, 0.1, 0.0};
  for (int k = 0; k < 4; ++k) {
    const auto d = fixtures::random_intercept_data(40 + k, 5, 10, 0.5, 0.3, sus[k], 0.3);
    const auto fit = fit_lmm_reml(d.y, d.X, d.groups, {"Intercept", "x"});
    const auto grid = oracle::reml_grid_argmax(d.X, d.y, d.ids);
    const double at_fit = oracle::reml_dense(d.X, d.y, d.ids, fit.boundary ? std::exp(-12.0) : fit.theta);
    EXPECT_GE(at_fit, grid.value - 1e-9) << "fixture " << k;
    if (fit.boundary) {
      EXPECT_NEAR(grid.log_theta, -12.0, 1e-3) << "fixture " << k;
    } else {
      EXPECT_NEAR(fit.log_theta, grid.log_theta, 1e-3) << "fixture " << k;
    }
  }
}

TEST(Lmm, ProfiledCriterionMatchesDenseEvaluation) {
  const auto d = fixtures::random_intercept_data(9, 7, 5, 0, 1, 0.5, 0.5);
  for (double t : {1e-4, 0.1, 1.0, 30.0})
    EXPECT_NEAR(reml_loglik(d.X, d.y, d.ids, t), oracle::reml_dense(d.X, d.y, d.ids, t), 1e-9);
}

TEST(Lmm, CalibrationCoverage) {
  const auto c = fixtures::calibration_coverage(100);
  EXPECT_GE(c.intercept, 90);
  EXPECT_GE(c.slope, 90);
}

TEST(Lmm, Errors) {
  auto d = fixtures::random_intercept_data(5, 4, 5, 0, 1, 0.2, 0.2);
  Eigen::MatrixXd X(d.X.rows(), 3);
  X << d.X, 2 * d.X.col(1);
  EXPECT_THROW(fit_lmm_reml(d.y, X, d.groups, {"a", "b", "c"}), DomainError);
  std::vector<std::string> one(d.groups.size(), "only");
  EXPECT_THROW(fit_lmm_reml(d.y, d.X, one, {"a", "b"}), DomainError);
  EXPECT_THROW(fit_lmm_reml(d.y.head(3), d.X.topRows(3), {"a", "b", "c"}, {"a", "b"}), DomainError);
  EXPECT_THROW(fit_lmm_reml(d.y, d.X, d.groups, {"a"}), DomainError);
}

TEST(Lmm, GroupIdsAreDenseAndSorted) {
  EXPECT_EQ(group_ids({"b", "a", "b", "c"}), (std::vector<int>{1, 0, 1, 2}));
}
