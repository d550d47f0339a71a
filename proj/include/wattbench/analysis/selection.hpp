#pragma once

// Latency-constrained GPU choice: the lowest mean power among GPUs whose
// p95 TTFT is strictly below the threshold.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wattbench/analysis/categories.hpp"
#include "wattbench/error.hpp"

namespace wattbench::analysis {

inline constexpr double kDefaultTtftThresholdS = 0.070;

struct SelectionCandidate {
  std::string gpu;
  double ttft_p95_s = 0;
  double mean_power_w = 0;
};

struct SelectionResult {
  std::optional<std::string> chosen_gpu;
  double ttft_p95_s = 0;
  double mean_power_w = 0;
  double threshold_s = kDefaultTtftThresholdS;
  std::vector<SelectionCandidate> candidates_considered;
};

inline SelectionResult select_gpu_under_ttft(std::vector<SelectionCandidate> candidates,
                                             double threshold_s = kDefaultTtftThresholdS) {
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.gpu < b.gpu; });
  SelectionResult r;
  r.threshold_s = threshold_s;
  r.candidates_considered = candidates;
  for (const auto& c : candidates) {
    if (!(c.ttft_p95_s < threshold_s)) continue;
    if (!r.chosen_gpu || c.mean_power_w < r.mean_power_w) {
      r.chosen_gpu = c.gpu;
      r.ttft_p95_s = c.ttft_p95_s;
      r.mean_power_w = c.mean_power_w;
    }
  }
  return r;
}

/// Candidates for one category from the category means of TTFT and power.
inline std::vector<SelectionCandidate> category_candidates(const std::vector<ConfigMean>& means,
                                                           const std::string& scenario, SizeCategory category,
                                                           const std::map<std::string, SizeCategory>& categories,
                                                           const ModelLookup& lookup) {
  const auto ttft = aggregate_by_size_category(means, scenario, Metric::ttft_p95, categories, lookup);
  const auto power = aggregate_by_size_category(means, scenario, Metric::mean_power, categories, lookup);
  std::vector<SelectionCandidate> out;
  for (const auto& t : ttft.cells) {
    if (t.category != category) continue;
    for (const auto& p : power.cells)
      if (p.category == category && p.gpu == t.gpu) out.push_back({t.gpu, t.mean, p.mean});
  }
  return out;
}

/// 1 - chosen / baseline; negative when the choice draws more power.
inline double energy_savings(double power_chosen, double power_baseline) {
  if (!(power_chosen > 0) || !(power_baseline > 0)) throw DomainError("energy_savings: powers must be > 0");
  return 1.0 - power_chosen / power_baseline;
}

}  // namespace wattbench::analysis
