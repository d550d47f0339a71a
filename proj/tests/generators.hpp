#pragma once

// Randomized and transcribed fixtures shared by the unit and acceptance suites.

#include <vector>

#include "support.hpp"

namespace fixtures {

// Randomized trace: piecewise power levels with noise, slowly drifting temperature.
inline std::vector<TelemetrySample> random_gate_trace(Xoshiro256& rng) {
  const double rate = 1.0 + static_cast<double>(rng.below(2));
  const double length = 310.0 + 40.0 * rng.uniform01();
  double level = 30.0 + 100.0 * rng.uniform01();
  double noise = 3.0 * rng.uniform01();
  double temp = 55.0 + 20.0 * rng.uniform01();
  const double temp_slope = -0.1 * rng.uniform01();
  double seg_end = 5.0 + 60.0 * rng.uniform01();
  std::vector<TelemetrySample> s;
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t > length) break;
    if (t >= seg_end) {
      level += 10.0 * (rng.uniform01() - 0.6);
      noise = 3.0 * rng.uniform01();
      seg_end = t + 5.0 + 60.0 * rng.uniform01();
    }
    temp += temp_slope / rate;
    s.push_back(sample(t, std::max(0.0, level + noise * (rng.uniform01() - 0.5)), temp));
  }
  return s;
}

// Published low-load medium-category measurements: (GPU, TTFT p95 s, mean power W).
inline std::vector<analysis::SelectionCandidate> low_load_medium() {
  return {{"A30 PCIe", 0.060, 38.3},     {"H200 NVL", 0.013, 125.1}, {"L4", 0.132, 38.8},
          {"A100 PCIe", 0.026, 70.7},    {"RTX 3090", 0.088, 65.2},  {"RTX 4090", 0.039, 41.1},
          {"H100 NVL", 0.029, 94.7},     {"L40S", 0.042, 123.5},     {"Tesla V100", 0.049, 72.8}};
}

}  // namespace fixtures
