#pragma once

// Closed-form energy of a first-order-lag power model under a busy/idle
// schedule. Within a segment of constant target T the power is
// P(t) = T + (P0 - T) exp(-(t - s) / tau), whose integral over length L is
// T L + (P0 - T) tau (1 - exp(-L / tau)).

#include <cmath>
#include <utility>
#include <vector>

namespace oracle {

struct RcProfile {
  double idle_w = 0;
  double busy_w = 0;
  double rise_tau_s = 1;
  double fall_tau_s = 1;
};

struct RcResult {
  double energy_j = 0;
  double end_power_w = 0;
};

/// busy: sorted disjoint intervals. Power at t0 is p0.
inline RcResult rc_energy(const std::vector<std::pair<double, double>>& busy, const RcProfile& prof, double t0,
                          double t1, double p0) {
  std::vector<std::pair<double, bool>> edges;  // (time, busy after)
  for (const auto& [a, b] : busy) {
    edges.push_back({a, true});
    edges.push_back({b, false});
  }
  bool state = false;
  for (const auto& [a, b] : busy)
    if (a <= t0 && t0 < b) state = true;
  double t = t0, p = p0, e = 0;
  auto run = [&](double until) {
    if (until <= t) return;
    const double target = state ? prof.busy_w : prof.idle_w;
    const double tau = target > p ? prof.rise_tau_s : prof.fall_tau_s;
    const double L = until - t;
    e += target * L + (p - target) * tau * (1.0 - std::exp(-L / tau));
    p = target + (p - target) * std::exp(-L / tau);
    t = until;
  };
  for (const auto& [ts, s] : edges) {
    if (ts <= t0) continue;
    if (ts >= t1) break;
    run(ts);
    state = s;
  }
  run(t1);
  return {e, p};
}

}  // namespace oracle
