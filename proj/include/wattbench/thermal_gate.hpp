#pragma once

// Cold-down readiness gate.
//
// A sample at time t makes the gate ready when all of the following hold:
//   * t - t_first >= window_s (the window is fully covered),
//   * max(power) - min(power) over samples in [t - window_s, t] <= band,
//   * temp(t) < temp_max_c (current sample only).
// Otherwise, once t - t_first >= timeout_s the gate times out. Readiness is
// checked before the timeout on the same sample. One verdict at most.

#include <deque>
#include <optional>

#include <fmt/format.h>

#include "wattbench/error.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

class ThermalGate {
 public:
  explicit ThermalGate(GateConfig config) : config_(config) { config_.validate(); }

  const GateConfig& config() const { return config_; }
  bool done() const { return verdict_.has_value(); }
  const std::optional<GateVerdict>& verdict() const { return verdict_; }

  /// Feeds one sample; returns the verdict on the step that produces it.
  std::optional<GateVerdict> step(const TelemetrySample& s) {
    if (verdict_) return std::nullopt;
    if (last_ts_ && !(s.ts > *last_ts_))
      throw DomainError(fmt::format("thermal gate: out-of-order sample at {} after {}", s.ts, *last_ts_));
    if (!start_) start_ = s.ts;
    last_ts_ = s.ts;

    // Monotonic deques hold the window's running max and min.
    while (!max_q_.empty() && max_q_.back().power_w <= s.power_w) max_q_.pop_back();
    max_q_.push_back(s);
    while (!min_q_.empty() && min_q_.back().power_w >= s.power_w) min_q_.pop_back();
    min_q_.push_back(s);
    const double lower = s.ts - config_.window_s - kEps;
    while (max_q_.front().ts < lower) max_q_.pop_front();
    while (min_q_.front().ts < lower) min_q_.pop_front();

    const double elapsed = s.ts - *start_;
    const bool covered = elapsed >= config_.window_s - kEps;
    const bool stable = max_q_.front().power_w - min_q_.front().power_w <= config_.power_band_w;
    const bool cool = s.temp_c < config_.temp_max_c;
    if (covered && stable && cool) {
      verdict_ = GateVerdict{GateVerdict::Kind::ready, s.ts};
    } else if (elapsed >= config_.timeout_s - kEps) {
      verdict_ = GateVerdict{GateVerdict::Kind::timed_out, s.ts};
    }
    return verdict_;
  }

  static constexpr double kEps = 1e-9;

 private:
  GateConfig config_;
  std::optional<double> start_;
  std::optional<double> last_ts_;
  std::deque<TelemetrySample> max_q_;
  std::deque<TelemetrySample> min_q_;
  std::optional<GateVerdict> verdict_;
};

/// Folds the gate over a sample source (a callable returning
/// std::optional<TelemetrySample>, nullopt at end). Stops pulling as soon as a
/// verdict is reached.
template <class Source>
GateVerdict await_ready(Source&& next, const GateConfig& config) {
  ThermalGate gate(config);
  while (auto s = next()) {
    if (auto v = gate.step(*s)) return *v;
  }
  throw DomainError("thermal gate: sample stream ended before a verdict");
}

}  // namespace wattbench
