#pragma once

// Per-model GPU placements: for every model, GPUs sorted ascending by the
// metric (ties by GPU name); 1st/2nd/3rd places tallied per GPU.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "wattbench/analysis/table.hpp"

namespace wattbench::analysis {

struct GpuPlacements {
  std::string gpu;
  int first = 0;
  int second = 0;
  int third = 0;
  int total_models = 0;  // models with data on this GPU in the scenario

  bool operator==(const GpuPlacements&) const = default;
};

struct RankingTable {
  std::string scenario;
  Metric metric = Metric::energy_per_token;
  std::vector<GpuPlacements> rows;  // sorted by GPU name
  int models_ranked = 0;
  std::vector<std::string> skipped_models;  // fewer than 2 GPUs

  const GpuPlacements* find(const std::string& gpu) const {
    for (const auto& r : rows)
      if (r.gpu == gpu) return &r;
    return nullptr;
  }
};

inline RankingTable rank_gpus(const std::vector<ConfigMean>& means, Metric metric, const std::string& scenario) {
  RankingTable t;
  t.scenario = scenario;
  t.metric = metric;
  std::map<std::string, std::vector<std::pair<double, std::string>>> by_model;
  std::map<std::string, GpuPlacements> tally;
  for (const auto& m : means) {
    if (m.scenario != scenario) continue;
    by_model[m.model].push_back({m.value(metric), m.gpu});
    auto& row = tally[m.gpu];
    row.gpu = m.gpu;
    ++row.total_models;
  }
  for (auto& [model, v] : by_model) {
    if (v.size() < 2) {
      t.skipped_models.push_back(model);
      continue;
    }
    std::sort(v.begin(), v.end());
    ++t.models_ranked;
    ++tally[v[0].second].first;
    ++tally[v[1].second].second;
    if (v.size() > 2) ++tally[v[2].second].third;
  }
  for (auto& [_, row] : tally) t.rows.push_back(row);
  return t;
}

}  // namespace wattbench::analysis
