#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"

using namespace wattbench;

namespace {
RunRecord window(double t0, double t1, std::vector<std::pair<double, double>> requests) {
  RunRecord r;
  r.t_start = t0;
  r.t_end = t1;
  for (auto [a, b] : requests) {
    RequestRecord q;
    q.arrival_ts = a;
    q.first_token_ts = a;
    q.completion_ts = b;
    q.output_tokens = 10;
    r.requests.push_back(q);
  }
  r.trace = fixtures::trace_of(t0, t1, 10, [](double) { return 10.0; });
  return r;
}
}  // namespace

TEST(Percentile, NearestRank) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 95), 95);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 100);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{5, 1, 3}, 50), 3);
  for (double p : {1.0, 50.0, 99.0, 100.0}) EXPECT_DOUBLE_EQ(percentile(std::vector<double>{7}, p), 7);
  EXPECT_THROW(percentile(std::vector<double>{}, 50), DomainError);
  EXPECT_THROW(percentile(v, 0), DomainError);
  EXPECT_THROW(percentile(v, 101), DomainError);
}

TEST(Percentile, MonotoneAndPermutationInvariant) {
  Xoshiro256 rng(3);
  std::vector<double> v;
  for (int i = 0; i < 57; ++i) v.push_back(rng.normal());
  auto w = v;
  rng.shuffle(std::span<double>(w));
  double prev = -1e300;
  for (double p = 0.5; p <= 100; p += 0.5) {
    const double x = percentile(v, p);
    EXPECT_GE(x, prev);
    EXPECT_EQ(x, percentile(w, p));
    prev = x;
  }
}

TEST(IdleFraction, Examples) {
  EXPECT_DOUBLE_EQ(idle_fraction(window(0, 300, {{10, 40}})), 0.9);
  EXPECT_DOUBLE_EQ(idle_fraction(window(0, 10, {{0, 5}, {5, 10}})), 0.0);
  EXPECT_DOUBLE_EQ(idle_fraction(window(0, 10, {})), 1.0);
  // Overlaps are counted once; spill-over past the window is clipped.
  EXPECT_DOUBLE_EQ(idle_fraction(window(0, 10, {{1, 4}, {2, 3}, {8, 20}})), 0.5);
  auto unfinished = window(0, 10, {{6, 7}});
  unfinished.requests[0].completion_ts.reset();
  EXPECT_DOUBLE_EQ(idle_fraction(unfinished), 0.6);
}

TEST(RunMetrics, EnergyPerTokenAndMeanPower) {
  auto r = window(0, 300, {{0, 10}});
  r.trace = fixtures::trace_of(0, 300, 10, [](double) { return 10.0; });
  r.requests[0].output_tokens = 24000;
  r.requests[0].input_tokens = 100;
  const auto m = compute_run_metrics(r);
  EXPECT_NEAR(m.energy_j, 3000, 1e-9);
  EXPECT_NEAR(m.mean_power_w, 10, 1e-12);
  EXPECT_NEAR(m.energy_per_output_token_j, 0.125, 1e-12);
  EXPECT_NEAR(m.throughput_tps, 80, 1e-12);
  EXPECT_NEAR(m.mean_power_w * m.duration_s, m.energy_j, 1e-9 * m.energy_j);
  EXPECT_NEAR(m.energy_per_output_token_j * m.total_output_tokens, m.energy_j, 1e-9 * m.energy_j);

  auto b = window(0, 12, {{0, 12}});
  b.trace = fixtures::trace_of(0, 12, 10, [](double) { return 100.0; });
  b.requests[0].output_tokens = 24000;
  EXPECT_NEAR(compute_run_metrics(b).energy_per_output_token_j, 0.05, 1e-12);
}

TEST(RunMetrics, FailedAndPostWindowRequestsExcludedFromTokens) {
  auto r = window(0, 10, {{0, 5}, {1, 6}, {2, 12}});
  r.requests[1].ok = false;
  r.requests[1].error = "timeout";
  r.requests[2].post_window = true;
  const auto m = compute_run_metrics(r);
  EXPECT_EQ(m.total_output_tokens, 10);
}

TEST(RunMetrics, Errors) {
  auto r = window(0, 10, {{0, 5}});
  r.requests[0].ok = false;
  r.requests[0].error = "x";
  EXPECT_THROW(compute_run_metrics(r), DomainError);
  auto z = window(0, 10, {{0, 5}});
  z.requests[0].output_tokens = 0;
  EXPECT_THROW(compute_run_metrics(z), DomainError);
}

TEST(ConfidenceInterval, Examples) {
  const auto ci = confidence_interval_95(std::vector<double>{10, 12});
  EXPECT_DOUBLE_EQ(ci.mean, 11);
  EXPECT_NEAR(ci.half_width, 12.706, 1e-3);
  EXPECT_DOUBLE_EQ(confidence_interval_95(std::vector<double>{4, 4, 4}).half_width, 0);
  EXPECT_THROW(confidence_interval_95(std::vector<double>{1}), DomainError);
}

TEST(ComponentShares, TableExample) {
  const auto s = component_shares({{{"gpu", 925}, {"cpu", 70}, {"dram", 5}}});
  ASSERT_EQ(s.size(), 3u);
  std::map<std::string, double> by;
  for (const auto& c : s) by[c.component] = c.mean_share_pct;
  EXPECT_NEAR(by["gpu"], 92.5, 1e-9);
  EXPECT_NEAR(by["cpu"], 7.0, 1e-9);
  EXPECT_NEAR(by["dram"], 0.5, 1e-9);
  EXPECT_FALSE(s[0].correlation_with_total);
}

TEST(ComponentShares, Correlations) {
  std::vector<std::map<std::string, double>> runs;
  for (double g : {100.0, 200.0, 150.0, 120.0}) runs.push_back({{"gpu", g}, {"dram", 5.0}});
  for (const auto& c : component_shares(runs)) {
    if (c.component == "gpu") {
      ASSERT_TRUE(c.correlation_with_total);
      EXPECT_NEAR(*c.correlation_with_total, 1.0, 1e-12);
    } else {
      EXPECT_FALSE(c.correlation_with_total);
    }
  }
  EXPECT_THROW(component_shares({{{"gpu", 0}}}), DomainError);
  EXPECT_THROW(component_shares({}), DomainError);
}

TEST(Aggregate, IdenticalSingleAndSpread) {
  const auto b = *fixtures::batch_record().derived;
  auto same = aggregate_experiment({b, b, b, b, b});
  EXPECT_EQ(same.iterations, 5u);
  EXPECT_DOUBLE_EQ(same.metrics["energy_j"].sd, 0);
  EXPECT_DOUBLE_EQ(*same.metrics["energy_j"].ci_half_width, 0);

  EXPECT_FALSE(aggregate_experiment({b}).metrics["energy_j"].ci_half_width);

  std::vector<MetricsBundle> v;
  for (double e : {100.0, 102.0, 98.0, 101.0, 99.0}) {
    auto x = b;
    x.energy_j = e;
    v.push_back(x);
  }
  const auto s = aggregate_experiment(v).metrics["energy_j"];
  EXPECT_DOUBLE_EQ(s.mean, 100);
  EXPECT_NEAR(s.sd, std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(*s.ci_half_width, 2.776445 * std::sqrt(2.5) / std::sqrt(5.0), 1e-5);
  EXPECT_GE(s.mean, s.min);
  EXPECT_LE(s.mean, s.max);
  EXPECT_THROW(aggregate_experiment({}), DomainError);
}
