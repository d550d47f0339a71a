#pragma once

// Power-trace arithmetic: energy integration, mean power, idle estimation,
// the sampling-rate error study, and the trace replay CSV format.
//
// Integration rule: trapezoid over the samples strictly inside (t0, t1),
// with the boundary values linearly interpolated at t0 and t1. A window may
// overhang the trace by up to half a nominal sample period on either side;
// the overhang is filled with the nearest sample's value.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wattbench/error.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

namespace detail {

inline double power_at(const std::vector<TelemetrySample>& s, double t) {
  if (t <= s.front().ts) return s.front().power_w;
  if (t >= s.back().ts) return s.back().power_w;
  auto hi = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const TelemetrySample& x) { return v < x.ts; });
  auto lo = hi - 1;
  if (lo->ts == t) return lo->power_w;
  const double w = (t - lo->ts) / (hi->ts - lo->ts);
  return lo->power_w + w * (hi->power_w - lo->power_w);
}

}  // namespace detail

/// Energy in joules over [t0, t1].
inline double integrate_energy(const TelemetryTrace& trace, double t0, double t1) {
  if (!(t0 < t1)) throw DomainError("integrate_energy: requires t0 < t1");
  const auto& s = trace.samples;
  if (s.size() < 2) throw DomainError("integrate_energy: fewer than 2 samples in window");
  const double slack = 0.5 * trace.period() + 1e-9;
  if (t0 < s.front().ts - slack || t1 > s.back().ts + slack)
    throw DomainError(fmt::format("integrate_energy: window [{}, {}] outside trace coverage [{}, {}]",
                                  t0, t1, s.front().ts, s.back().ts));

  auto cmp = [](const TelemetrySample& x, double v) { return x.ts < v; };
  auto first = std::lower_bound(s.begin(), s.end(), t0 - slack, cmp);
  auto last = std::upper_bound(s.begin(), s.end(), t1 + slack,
                               [](double v, const TelemetrySample& x) { return v < x.ts; });
  if (last - first < 2) throw DomainError("integrate_energy: fewer than 2 samples in window");

  double prev_t = t0;
  double prev_p = detail::power_at(s, t0);
  double energy = 0.0;
  auto it = std::upper_bound(s.begin(), s.end(), t0,
                             [](double v, const TelemetrySample& x) { return v < x.ts; });
  for (; it != s.end() && it->ts < t1; ++it) {
    energy += 0.5 * (prev_p + it->power_w) * (it->ts - prev_t);
    prev_t = it->ts;
    prev_p = it->power_w;
  }
  energy += 0.5 * (prev_p + detail::power_at(s, t1)) * (t1 - prev_t);
  return energy;
}

inline double mean_power(const TelemetryTrace& trace, double t0, double t1) {
  return integrate_energy(trace, t0, t1) / (t1 - t0);
}

/// Mean of per-trace mean powers; each trace must span at least 10 s.
inline double estimate_idle_power(const std::vector<TelemetryTrace>& pre_run_traces) {
  if (pre_run_traces.empty()) throw DomainError("estimate_idle_power: no traces");
  double sum = 0.0;
  for (const auto& t : pre_run_traces) {
    if (t.samples.size() < 2 || t.samples.back().ts - t.samples.front().ts < 10.0 - 1e-9)
      throw DomainError("estimate_idle_power: each trace must cover >= 10 s");
    sum += mean_power(t, t.samples.front().ts, t.samples.back().ts);
  }
  return sum / static_cast<double>(pre_run_traces.size());
}

struct SamplingError {
  double rate_hz;        // effective rate after decimation
  std::size_t stride;    // keep every stride-th sample
  double energy_j;       // decimated-trace energy
  double reference_j;    // dense-trace energy over the same span
  double relative_error;
};

/// Keeps every k-th sample of a dense trace (k = round(dense / rate)).
inline TelemetryTrace decimate(const TelemetryTrace& dense, std::size_t stride) {
  TelemetryTrace out;
  out.nominal_rate_hz = dense.nominal_rate_hz / static_cast<double>(stride);
  for (std::size_t i = 0; i < dense.samples.size(); i += stride) out.samples.push_back(dense.samples[i]);
  return out;
}

/// For each candidate rate, decimate and compare the energy to the dense
/// integral over the decimated trace's span: |E_rate - E_dense| / E_dense.
inline std::vector<SamplingError> sampling_error_study(const TelemetryTrace& dense,
                                                       const std::vector<double>& candidate_rates) {
  std::vector<SamplingError> out;
  for (double rate : candidate_rates) {
    if (!(rate > 0) || rate >= dense.nominal_rate_hz)
      throw DomainError(fmt::format("sampling_error_study: candidate rate {} Hz must be below the dense rate {} Hz",
                                    rate, dense.nominal_rate_hz));
    const auto stride = static_cast<std::size_t>(std::llround(dense.nominal_rate_hz / rate));
    const auto coarse = decimate(dense, std::max<std::size_t>(stride, 1));
    if (coarse.samples.size() < 2) throw DomainError("sampling_error_study: trace too short for rate");
    const double t0 = coarse.samples.front().ts, t1 = coarse.samples.back().ts;
    const double e_coarse = integrate_energy(coarse, t0, t1);
    const double e_dense = integrate_energy(dense, t0, t1);
    out.push_back({coarse.nominal_rate_hz, stride, e_coarse, e_dense,
                   std::abs(e_coarse - e_dense) / e_dense});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay CSV: ts,power_w,temp_c,gpu_util_pct,mem_used_mb,clock_mhz

inline constexpr std::string_view kTraceCsvHeader = "ts,power_w,temp_c,gpu_util_pct,mem_used_mb,clock_mhz";

inline void write_trace_csv(const TelemetryTrace& trace, std::ostream& os) {
  os << kTraceCsvHeader << '\n';
  // {} is the shortest representation that parses back to the same double.
  for (const auto& s : trace.samples)
    os << fmt::format("{},{},{},{},{},{}\n", s.ts, s.power_w, s.temp_c, s.gpu_util_pct,
                      s.mem_used_mb, s.clock_mhz);
}

inline void write_trace_csv(const TelemetryTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write trace file " + path);
  write_trace_csv(trace, os);
}

/// Reads a replay CSV. Without an explicit nominal rate it is inferred from
/// the median sample spacing.
inline TelemetryTrace read_trace_csv(std::istream& is, std::optional<double> nominal_rate_hz = {}) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("trace csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw DataError("trace csv: unexpected header '" + line + "'");
  TelemetryTrace trace;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[6];
    const char* p = line.c_str();
    for (int k = 0; k < 6; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(p, &end);
      if (end == p || (k < 5 && *end != ',') || (k == 5 && *end != '\0'))
        throw DataError(fmt::format("trace csv: malformed line {}", lineno));
      p = end + (k < 5 ? 1 : 0);
    }
    trace.samples.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  if (nominal_rate_hz) {
    trace.nominal_rate_hz = *nominal_rate_hz;
  } else if (trace.samples.size() >= 2) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < trace.samples.size(); ++i)
      gaps.push_back(trace.samples[i].ts - trace.samples[i - 1].ts);
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double g = gaps[gaps.size() / 2];
    if (g > 0) trace.nominal_rate_hz = 1.0 / g;
  }
  trace.validate();
  return trace;
}

inline TelemetryTrace read_trace_csv(const std::string& path, std::optional<double> nominal_rate_hz = {}) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read trace file " + path);
  return read_trace_csv(is, nominal_rate_hz);
}

}  // namespace wattbench
