#pragma once

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wattbench/error.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

using FitOracle = std::function<bool(const ModelSpec&, const GpuSpec&)>;

/// Weights-only memory heuristic: 2 bytes per parameter must fit in the
/// engine's memory budget (90% of device memory, 80% below 20 GB).
inline bool memory_fit_heuristic(const ModelSpec& model, const GpuSpec& gpu) {
  const double utilization = gpu.memory_gb < 20.0 ? 0.8 : 0.9;
  return 2.0 * model.total_params_b <= gpu.memory_gb * utilization;
}

/// Recorded outcomes win; pairs never attempted fall back to the heuristic.
class RecordedFitOracle {
 public:
  void record(const std::string& model, const std::string& gpu, bool loaded) {
    (loaded ? ok_ : failed_).insert({model, gpu});
  }

  bool operator()(const ModelSpec& m, const GpuSpec& g) const {
    const std::pair<std::string, std::string> key{m.hub_handle, g.name};
    if (ok_.contains(key)) return true;
    if (failed_.contains(key)) return false;
    return memory_fit_heuristic(m, g);
  }

 private:
  std::set<std::pair<std::string, std::string>> ok_, failed_;
};

/// Smallest compatible category: small if the model fits every GPU, medium
/// if it fits every GPU above 16 GB, large above 32 GB, else xlarge.
inline SizeCategory assign_size_category(const ModelSpec& model, const std::vector<GpuSpec>& fleet,
                                         const FitOracle& fits = memory_fit_heuristic) {
  bool any = false;
  for (const auto& g : fleet) any |= fits(model, g);
  if (!any) throw DomainError("model " + model.hub_handle + " fits no GPU in the fleet");
  auto fits_all_above = [&](double min_exclusive_gb) {
    for (const auto& g : fleet)
      if (g.memory_gb > min_exclusive_gb && !fits(model, g)) return false;
    return true;
  };
  if (fits_all_above(0.0)) return SizeCategory::small;
  if (fits_all_above(16.0)) return SizeCategory::medium;
  if (fits_all_above(32.0)) return SizeCategory::large;
  return SizeCategory::xlarge;
}

}  // namespace wattbench
