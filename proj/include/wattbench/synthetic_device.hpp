#pragma once

// Desk-scale stand-in for a GPU: power and temperature follow first-order
// lags toward "busy" or "idle" targets depending on whether any request is in
// flight. The mock SUT drives the load; a SyntheticProvider samples it.

#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "wattbench/clock.hpp"
#include "wattbench/error.hpp"
#include "wattbench/rng.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

struct SyntheticDeviceProfile {
  std::string name = "synthetic";
  double idle_power_w = 30;
  double max_power_w = 200;
  double power_rise_tau_s = 1.0;
  double power_fall_tau_s = 2.0;
  double temp_idle_c = 40;
  double temp_max_c = 80;
  double temp_tau_s = 20;
  double noise_std_w = 0.2;
  std::uint64_t seed = 0;
  // Constant readings reported alongside power.
  double mem_used_mb = 4096;
  double clock_idle_mhz = 210;
  double clock_busy_mhz = 1740;

  void validate() const {
    if (!(idle_power_w < max_power_w)) throw ConfigError("device profile: idle_power_w must be < max_power_w");
    if (!(idle_power_w >= 0)) throw ConfigError("device profile: idle_power_w must be >= 0");
    if (!(power_rise_tau_s > 0 && power_fall_tau_s > 0 && temp_tau_s > 0))
      throw ConfigError("device profile: time constants must be > 0");
    if (!(noise_std_w >= 0)) throw ConfigError("device profile: noise_std_w must be >= 0");
  }

  bool operator==(const SyntheticDeviceProfile&) const = default;
};

/// Thread-safe lag model. Times passed in that precede the last update are
/// clamped forward so concurrent callers never rewind the state.
class SyntheticDevice {
 public:
  struct Transition {
    double ts;
    bool busy;
  };

  explicit SyntheticDevice(SyntheticDeviceProfile profile, double t0 = 0.0)
      : profile_(std::move(profile)), rng_(profile_.seed), anchor_(t0),
        power_(profile_.idle_power_w), temp_(profile_.temp_idle_c) {
    profile_.validate();
  }

  /// Starts in the given state instead of at idle (used for cool-down fixtures).
  SyntheticDevice(SyntheticDeviceProfile profile, double t0, double power_w, double temp_c)
      : SyntheticDevice(std::move(profile), t0) {
    power_ = power_w;
    temp_ = temp_c;
  }

  const SyntheticDeviceProfile& profile() const { return profile_; }

  void set_in_flight(double t, int in_flight) {
    std::lock_guard lock(mu_);
    advance(t);
    const bool busy = in_flight > 0;
    if (busy != busy_) {
      busy_ = busy;
      transitions_.push_back({anchor_, busy});
    }
  }

  /// Same as set_in_flight, stamped with the run clock under the lock.
  void set_in_flight_now(int in_flight) {
    std::lock_guard lock(mu_);
    advance(RunClock::now());
    const bool busy = in_flight > 0;
    if (busy != busy_) {
      busy_ = busy;
      transitions_.push_back({anchor_, busy});
    }
  }

  /// Noise-free state at time t.
  TelemetrySample peek(double t) {
    std::lock_guard lock(mu_);
    advance(t);
    return make_sample(0.0);
  }

  /// Noisy reading at time t (noise drawn from the seeded stream).
  TelemetrySample read(double t) {
    std::lock_guard lock(mu_);
    advance(t);
    return make_sample(profile_.noise_std_w > 0 ? profile_.noise_std_w * rng_.normal() : 0.0);
  }

  TelemetrySample read_now() {
    std::lock_guard lock(mu_);
    advance(RunClock::now());
    return make_sample(profile_.noise_std_w > 0 ? profile_.noise_std_w * rng_.normal() : 0.0);
  }

  std::vector<Transition> transitions() const {
    std::lock_guard lock(mu_);
    return transitions_;
  }

 private:
  void advance(double t) {
    if (t <= anchor_) return;
    const double dt = t - anchor_;
    const double target = busy_ ? profile_.max_power_w : profile_.idle_power_w;
    const double tau = target > power_ ? profile_.power_rise_tau_s : profile_.power_fall_tau_s;
    power_ = target + (power_ - target) * std::exp(-dt / tau);
    const double temp_target = busy_ ? profile_.temp_max_c : profile_.temp_idle_c;
    temp_ = temp_target + (temp_ - temp_target) * std::exp(-dt / profile_.temp_tau_s);
    anchor_ = t;
  }

  TelemetrySample make_sample(double noise) const {
    TelemetrySample s;
    s.ts = anchor_;
    s.power_w = std::max(0.0, power_ + noise);
    s.temp_c = temp_;
    s.gpu_util_pct = busy_ ? 100.0 : 0.0;
    s.mem_used_mb = profile_.mem_used_mb;
    s.clock_mhz = busy_ ? profile_.clock_busy_mhz : profile_.clock_idle_mhz;
    return s;
  }

  SyntheticDeviceProfile profile_;
  mutable std::mutex mu_;
  Xoshiro256 rng_;
  double anchor_;
  double power_;
  double temp_;
  bool busy_ = false;
  std::vector<Transition> transitions_;
};

/// Offline rendering of a device under a scripted busy/idle schedule, sampled
/// at a fixed rate over [t0, t1]. Deterministic for a fixed profile seed.
inline TelemetryTrace synthesize_trace(const SyntheticDeviceProfile& profile,
                                       const std::vector<SyntheticDevice::Transition>& load,
                                       double t0, double t1, double rate_hz) {
  if (!(rate_hz > 0)) throw DomainError("synthesize_trace: rate must be > 0");
  SyntheticDevice dev(profile, t0);
  TelemetryTrace trace;
  trace.nominal_rate_hz = rate_hz;
  std::size_t next = 0;
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) * rate_hz + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t0 + static_cast<double>(i) / rate_hz;
    while (next < load.size() && load[next].ts <= t) {
      dev.set_in_flight(load[next].ts, load[next].busy ? 1 : 0);
      ++next;
    }
    trace.samples.push_back(dev.read(t));
  }
  return trace;
}

}  // namespace wattbench
