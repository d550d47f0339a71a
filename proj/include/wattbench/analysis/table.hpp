#pragma once

// Flattened per-run rows and per-configuration means: the analysis layer's
// input. Rows come either from RunRecords or from the sidecar CSV.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "wattbench/dataset.hpp"
#include "wattbench/error.hpp"
#include "wattbench/stats.hpp"

namespace wattbench::analysis {

struct FlatRow {
  std::string model;
  std::string gpu;
  std::string scenario;  // ScenarioSpec::label()
  int iteration = 0;
  double energy_j = 0;
  double energy_per_output_token_j = 0;
  double mean_power_w = 0;
  double throughput_tps = 0;
  double ttft_p95_s = 0;
  double idle_fraction = 0;
  double duration_s = 0;
  std::int64_t total_output_tokens = 0;
};

enum class Metric { energy_per_token, mean_power, ttft_p95, throughput, idle_fraction };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::energy_per_token: return "energy_per_output_token_j";
    case Metric::mean_power: return "mean_power_w";
    case Metric::ttft_p95: return "ttft_p95_s";
    case Metric::throughput: return "throughput_tps";
    case Metric::idle_fraction: return "idle_fraction";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  for (auto m : {Metric::energy_per_token, Metric::mean_power, Metric::ttft_p95, Metric::throughput,
                 Metric::idle_fraction})
    if (s == to_string(m)) return m;
  if (s == "energy_per_token") return Metric::energy_per_token;
  if (s == "mean_power") return Metric::mean_power;
  throw ConfigError(fmt::format("unknown metric '{}'", s));
}

/// Successful records only; error records carry no metrics.
inline std::vector<FlatRow> flat_rows(const std::vector<RunRecord>& records) {
  std::vector<FlatRow> out;
  for (const auto& r : records) {
    if (!r.ok || !r.derived) continue;
    const auto& m = *r.derived;
    out.push_back({r.model.hub_handle, r.gpu.name, r.scenario.label(), r.iteration, m.energy_j,
                   m.energy_per_output_token_j, m.mean_power_w, m.throughput_tps, m.ttft_p95_s, m.idle_fraction,
                   m.duration_s, m.total_output_tokens});
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw DataError("csv: unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

/// Reads the flat CSV by column name; extra columns are ignored.
inline std::vector<FlatRow> read_flat_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError(path.string() + ": empty csv");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& need : split_csv_line(std::string(kFlatCsvHeader)))
    if (!col.contains(need)) throw DataError(fmt::format("{}: missing column '{}'", path.string(), need));

  std::vector<FlatRow> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw DataError(fmt::format("{}:{}: wrong field count", path.string(), lineno));
    auto num = [&](const char* name) {
      const auto& s = f[col.at(name)];
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw DataError(fmt::format("{}:{}: bad number in {}", path.string(), lineno, name));
      return v;
    };
    FlatRow r;
    r.model = f[col.at("model")];
    r.gpu = f[col.at("gpu")];
    r.scenario = f[col.at("scenario")];
    r.iteration = static_cast<int>(num("iteration"));
    r.energy_j = num("energy_j");
    r.energy_per_output_token_j = num("energy_per_output_token_j");
    r.mean_power_w = num("mean_power_w");
    r.throughput_tps = num("throughput_tps");
    r.ttft_p95_s = num("ttft_p95_s");
    r.idle_fraction = num("idle_fraction");
    r.duration_s = num("duration_s");
    r.total_output_tokens = static_cast<std::int64_t>(num("total_output_tokens"));
    out.push_back(std::move(r));
  }
  return out;
}

/// Loads a dataset by extension: .jsonl through full validation, anything
/// else as a flat CSV.
inline std::vector<FlatRow> load_rows(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return flat_rows(read_dataset(path));
  return read_flat_csv(path);
}

/// Mean over the iterations of one (model, gpu, scenario) configuration.
struct ConfigMean {
  std::string model;
  std::string gpu;
  std::string scenario;
  int iterations = 0;
  double energy_per_token_j = 0;
  double mean_power_w = 0;
  double ttft_p95_s = 0;
  double throughput_tps = 0;
  double idle_fraction = 0;

  double value(Metric m) const {
    switch (m) {
      case Metric::energy_per_token: return energy_per_token_j;
      case Metric::mean_power: return mean_power_w;
      case Metric::ttft_p95: return ttft_p95_s;
      case Metric::throughput: return throughput_tps;
      case Metric::idle_fraction: return idle_fraction;
    }
    return 0;
  }
};

/// Sorted by (scenario, model, gpu).
inline std::vector<ConfigMean> configuration_means(const std::vector<FlatRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const FlatRow*>> groups;
  for (const auto& r : rows) groups[{r.scenario, r.model, r.gpu}].push_back(&r);
  std::vector<ConfigMean> out;
  for (const auto& [key, v] : groups) {
    ConfigMean c;
    std::tie(c.scenario, c.model, c.gpu) = key;
    c.iterations = static_cast<int>(v.size());
    for (const auto* r : v) {
      c.energy_per_token_j += r->energy_per_output_token_j;
      c.mean_power_w += r->mean_power_w;
      c.ttft_p95_s += r->ttft_p95_s;
      c.throughput_tps += r->throughput_tps;
      c.idle_fraction += r->idle_fraction;
    }
    const double n = static_cast<double>(v.size());
    c.energy_per_token_j /= n;
    c.mean_power_w /= n;
    c.ttft_p95_s /= n;
    c.throughput_tps /= n;
    c.idle_fraction /= n;
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<ConfigMean> filter_scenario(const std::vector<ConfigMean>& means, const std::string& scenario) {
  std::vector<ConfigMean> out;
  for (const auto& m : means)
    if (m.scenario == scenario) out.push_back(m);
  return out;
}

}  // namespace wattbench::analysis
