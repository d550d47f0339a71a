#pragma once

// Per (GPU, size category) means over dense models. A category's GPU set is
// every GPU on which some eligible model of that category has data; a model
// contributes only if it covers the whole set, so every GPU in a category
// averages the same models.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wattbench/analysis/model_dataset.hpp"
#include "wattbench/analysis/table.hpp"
#include "wattbench/metrics.hpp"
#include "wattbench/size_category.hpp"

namespace wattbench::analysis {

struct CategoryCell {
  std::string gpu;
  SizeCategory category = SizeCategory::small;
  double mean = 0;
  std::optional<double> ci_half_width;  // unavailable with a single model
  int n_models = 0;
};

struct CategoryAggregation {
  std::vector<CategoryCell> cells;  // sorted by (category, gpu)
  std::map<SizeCategory, std::vector<std::string>> included_models;
  std::map<SizeCategory, std::vector<std::string>> excluded_models;  // incomplete coverage
};

inline CategoryAggregation aggregate_by_size_category(const std::vector<ConfigMean>& means,
                                                      const std::string& scenario, Metric metric,
                                                      const std::map<std::string, SizeCategory>& categories,
                                                      const ModelLookup& lookup) {
  // model -> gpu -> value
  std::map<SizeCategory, std::map<std::string, std::map<std::string, double>>> data;
  for (const auto& m : means) {
    if (m.scenario != scenario) continue;
    auto cat = categories.find(m.model);
    if (cat == categories.end()) continue;
    const auto spec = lookup(m.model);
    if (!spec || spec->arch_kind != ArchKind::dense) continue;
    data[cat->second][m.model][m.gpu] = m.value(metric);
  }
  CategoryAggregation out;
  for (const auto& [cat, models] : data) {
    std::set<std::string> gpus;
    for (const auto& [_, per_gpu] : models)
      for (const auto& [g, _v] : per_gpu) gpus.insert(g);
    std::map<std::string, std::vector<double>> values;
    for (const auto& [model, per_gpu] : models) {
      if (per_gpu.size() != gpus.size()) {
        out.excluded_models[cat].push_back(model);
        continue;
      }
      out.included_models[cat].push_back(model);
      for (const auto& [g, v] : per_gpu) values[g].push_back(v);
    }
    for (const auto& [g, v] : values) {
      CategoryCell c{g, cat, stats::mean(v), std::nullopt, static_cast<int>(v.size())};
      if (v.size() >= 2) c.ci_half_width = confidence_interval_95(v).half_width;
      out.cells.push_back(c);
    }
  }
  return out;
}

/// Size categories for every model seen in the means, against the fleet of
/// GPUs in the same data. Pairs present in the data count as loaded;
/// other pairs fall back to the memory heuristic.
inline std::map<std::string, SizeCategory> categories_from_data(const std::vector<ConfigMean>& means,
                                                                const ModelLookup& lookup,
                                                                std::vector<std::string>* warnings = nullptr) {
  RecordedFitOracle fits;
  std::set<std::string> gpu_names, model_names;
  for (const auto& m : means) {
    gpu_names.insert(m.gpu);
    model_names.insert(m.model);
  }
  std::vector<GpuSpec> fleet;
  for (const auto& g : gpu_names) {
    auto spec = catalog::find_gpu(g);
    if (!spec) {
      if (warnings) warnings->push_back("gpu " + g + " not in catalog; left out of the category fleet");
      continue;
    }
    spec->name = g;  // keep the dataset's spelling so recorded pairs match
    fleet.push_back(*spec);
  }
  // A pair never run on a GPU in the fleet did not load there.
  for (const auto& model : model_names)
    for (const auto& g : fleet) fits.record(model, g.name, false);
  for (const auto& m : means) fits.record(m.model, m.gpu, true);
  std::map<std::string, SizeCategory> out;
  for (const auto& model : model_names) {
    auto spec = lookup(model);
    if (!spec || fleet.empty()) continue;
    try {
      out[model] = assign_size_category(*spec, fleet, std::cref(fits));
    } catch (const DomainError&) {
    }
  }
  return out;
}

}  // namespace wattbench::analysis
