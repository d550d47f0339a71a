#pragma once

// Per-run and per-experiment metrics.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wattbench/error.hpp"
#include "wattbench/stats.hpp"
#include "wattbench/telemetry.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("percentile of empty input");
  if (!(p > 0 && p <= 100)) throw DomainError("percentile: p must be in (0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

/// Fraction of [t_start, t_end] with no request in flight. A request is in
/// flight over [arrival, completion]; requests without a completion are
/// treated as in flight until t_end.
inline double idle_fraction(const RunRecord& run) {
  const double duration = run.t_end - run.t_start;
  if (!(duration > 0)) throw DomainError("idle_fraction: run has no duration");
  std::vector<std::pair<double, double>> iv;
  for (const auto& r : run.requests) {
    const double a = std::max(r.arrival_ts, run.t_start);
    const double b = std::min(r.completion_ts.value_or(run.t_end), run.t_end);
    if (b > a) iv.emplace_back(a, b);
  }
  std::sort(iv.begin(), iv.end());
  double busy = 0.0, cur_a = 0.0, cur_b = 0.0;
  bool open = false;
  for (const auto& [a, b] : iv) {
    if (!open || a > cur_b) {
      if (open) busy += cur_b - cur_a;
      cur_a = a;
      cur_b = b;
      open = true;
    } else {
      cur_b = std::max(cur_b, b);
    }
  }
  if (open) busy += cur_b - cur_a;
  return std::clamp(1.0 - busy / duration, 0.0, 1.0);
}

/// Derives the metrics bundle from the raw trace and request records.
/// Only successful requests that completed inside the window contribute
/// tokens; TTFT/e2e percentiles cover every successful request.
inline MetricsBundle compute_run_metrics(const RunRecord& run) {
  MetricsBundle m;
  m.duration_s = run.t_end - run.t_start;
  if (!(m.duration_s > 0)) throw DomainError("compute_run_metrics: t_end must exceed t_start");

  std::vector<double> ttft, e2e;
  std::size_t ok = 0;
  for (const auto& r : run.requests) {
    if (!r.ok) continue;
    ++ok;
    if (auto t = r.ttft()) ttft.push_back(*t);
    if (auto t = r.e2e()) e2e.push_back(*t);
    if (r.post_window) continue;
    m.total_input_tokens += r.input_tokens;
    m.total_output_tokens += r.output_tokens;
  }
  if (ok == 0) throw DomainError("compute_run_metrics: no successful requests");
  if (m.total_output_tokens == 0) throw DomainError("compute_run_metrics: zero output tokens");

  m.energy_j = integrate_energy(run.trace, run.t_start, run.t_end);
  m.mean_power_w = m.energy_j / m.duration_s;
  m.energy_per_output_token_j = m.energy_j / static_cast<double>(m.total_output_tokens);
  m.throughput_tps = static_cast<double>(m.total_output_tokens) / m.duration_s;
  m.ttft_p95_s = ttft.empty() ? 0.0 : percentile(ttft, 95);
  m.e2e_p95_s = e2e.empty() ? 0.0 : percentile(e2e, 95);
  m.idle_fraction = idle_fraction(run);
  return m;
}

struct ConfidenceInterval {
  double mean = 0;
  double half_width = 0;
};

/// mean +/- t_{n-1, 0.975} * s / sqrt(n).
inline ConfidenceInterval confidence_interval_95(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("confidence interval needs n >= 2");
  const double n = static_cast<double>(values.size());
  const double s = stats::sample_sd(values);
  return {stats::mean(values), stats::student_t_quantile(n - 1, 0.975) * s / std::sqrt(n)};
}

struct ComponentShare {
  std::string component;
  double mean_share_pct = 0;
  std::optional<double> correlation_with_total;  // absent with < 3 runs or zero variance
};

/// Per-run shares of total energy averaged over runs, plus each component's
/// Pearson correlation with the per-run totals.
inline std::vector<ComponentShare> component_shares(
    const std::vector<std::map<std::string, double>>& runs) {
  if (runs.empty()) throw DomainError("component_shares: no runs");
  std::vector<double> totals;
  for (const auto& r : runs) {
    double t = 0;
    for (const auto& [_, e] : r) t += e;
    if (!(t > 0)) throw DomainError("component_shares: run with zero total energy");
    totals.push_back(t);
  }
  std::map<std::string, std::vector<double>> energy;
  for (const auto& r : runs)
    for (const auto& [k, _] : r) energy[k];
  for (auto& [k, v] : energy)
    for (const auto& r : runs) {
      auto it = r.find(k);
      v.push_back(it == r.end() ? 0.0 : it->second);
    }
  std::vector<ComponentShare> out;
  for (const auto& [k, v] : energy) {
    ComponentShare c{k, 0.0, std::nullopt};
    for (std::size_t i = 0; i < v.size(); ++i) c.mean_share_pct += 100.0 * v[i] / totals[i];
    c.mean_share_pct /= static_cast<double>(v.size());
    if (v.size() >= 3) c.correlation_with_total = stats::pearson(v, totals);
    out.push_back(c);
  }
  return out;
}

struct MetricSummary {
  double mean = 0;
  double sd = 0;
  std::optional<double> ci_half_width;  // unavailable for a single iteration
  double min = 0;
  double max = 0;
};

struct ExperimentSummary {
  std::size_t iterations = 0;
  std::map<std::string, MetricSummary> metrics;
};

/// Named scalar view of a bundle, in a fixed order.
inline std::vector<std::pair<std::string, double>> metric_fields(const MetricsBundle& b) {
  return {{"energy_j", b.energy_j},
          {"energy_per_output_token_j", b.energy_per_output_token_j},
          {"mean_power_w", b.mean_power_w},
          {"throughput_tps", b.throughput_tps},
          {"ttft_p95_s", b.ttft_p95_s},
          {"e2e_p95_s", b.e2e_p95_s},
          {"idle_fraction", b.idle_fraction},
          {"total_input_tokens", static_cast<double>(b.total_input_tokens)},
          {"total_output_tokens", static_cast<double>(b.total_output_tokens)},
          {"duration_s", b.duration_s}};
}

inline ExperimentSummary aggregate_experiment(const std::vector<MetricsBundle>& iterations) {
  if (iterations.empty()) throw DomainError("aggregate_experiment: no iterations");
  ExperimentSummary out;
  out.iterations = iterations.size();
  std::map<std::string, std::vector<double>> cols;
  for (const auto& b : iterations)
    for (const auto& [k, v] : metric_fields(b)) cols[k].push_back(v);
  for (const auto& [k, v] : cols) {
    MetricSummary s;
    s.mean = stats::mean(v);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    if (v.size() >= 2) {
      s.sd = stats::sample_sd(v);
      s.ci_half_width = confidence_interval_95(v).half_width;
    }
    // Rounding can push the mean of identical values outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
    out.metrics[k] = s;
  }
  return out;
}

/// True when every stored derived value matches recomputation within rel_tol.
inline bool derived_matches(const RunRecord& run, double rel_tol = 1e-9) {
  if (!run.derived) return false;
  const auto fresh = compute_run_metrics(run);
  const auto a = metric_fields(*run.derived);
  const auto b = metric_fields(fresh);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i].second), std::abs(b[i].second), 1e-300});
    if (std::abs(a[i].second - b[i].second) > rel_tol * scale) return false;
  }
  return true;
}

}  // namespace wattbench
