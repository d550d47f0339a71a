#pragma once

// Domain value types shared by every module. Operations live in the
// module headers (telemetry.hpp, metrics.hpp, ...); this header only holds
// data and the type-level invariant checks.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "wattbench/error.hpp"

namespace wattbench {

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Hardware and models

enum class GpuProfile { consumer, enterprise };

struct GpuSpec {
  std::string name;
  std::string architecture;
  GpuProfile profile = GpuProfile::enterprise;
  double memory_gb = 0;
  double tdp_w = 0;
  double tflops_fp16 = 0;
  double mem_bw_gbs = 0;
  double l2_cache_mb = 0;
  std::optional<double> idle_power_w;  // measured, never the datasheet value
  int release_year = 0;

  void validate() const {
    if (name.empty()) throw ConfigError("gpu: empty name");
    if (!(memory_gb > 0)) throw ConfigError("gpu " + name + ": memory_gb must be > 0");
    if (!(tdp_w > 0)) throw ConfigError("gpu " + name + ": tdp_w must be > 0");
    if (idle_power_w && !(*idle_power_w < tdp_w))
      throw ConfigError("gpu " + name + ": idle_power_w must be below tdp_w");
  }

  bool operator==(const GpuSpec&) const = default;
};

enum class ArchKind { dense, moe };

struct ModelSpec {
  std::string hub_handle;
  std::string family;  // categorical model type
  ArchKind arch_kind = ArchKind::dense;
  double total_params_b = 0;
  double active_params_b = 0;
  // Architectural counts; absent when the model card was not ingested.
  std::optional<int> hidden_size;
  std::optional<int> num_layers;
  std::optional<int> num_attention_heads;
  std::optional<int> num_key_value_heads;

  bool has_architecture() const {
    return hidden_size && num_layers && num_attention_heads && num_key_value_heads;
  }

  void validate() const {
    if (hub_handle.empty()) throw ConfigError("model: empty hub handle");
    if (!(total_params_b > 0) || !(active_params_b > 0))
      throw ConfigError("model " + hub_handle + ": parameter counts must be > 0");
    if (active_params_b > total_params_b)
      throw ConfigError("model " + hub_handle + ": active params exceed total params");
    if (arch_kind == ArchKind::dense && active_params_b != total_params_b)
      throw ConfigError("model " + hub_handle + ": dense model must have active == total");
    for (auto c : {hidden_size, num_layers, num_attention_heads, num_key_value_heads})
      if (c && *c <= 0)
        throw ConfigError("model " + hub_handle + ": architectural counts must be > 0");
  }

  bool operator==(const ModelSpec&) const = default;
};

enum class SizeCategory { small, medium, large, xlarge };

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioKind { batch, server };

struct Warmup {
  enum class Kind { one_batch, fixed_seconds };
  Kind kind = Kind::one_batch;
  double seconds = 0;
  bool operator==(const Warmup&) const = default;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::batch;
  int batch_size = 0;          // batch only
  double arrival_rate_hz = 0;  // server only
  double duration_s = 0;       // server only
  Warmup warmup;
  int iterations = 5;

  /// Stable identifier used in datasets and reports: "batch" or "server@<rate>".
  std::string label() const {
    if (kind == ScenarioKind::batch) return "batch";
    return fmt::format("server@{}", arrival_rate_hz);
  }

  void validate() const {
    if (iterations < 1) throw ConfigError("scenario: iterations must be >= 1");
    if (kind == ScenarioKind::batch) {
      if (batch_size < 1) throw ConfigError("batch scenario: batch_size must be >= 1");
      if (arrival_rate_hz != 0 || duration_s != 0)
        throw ConfigError("batch scenario: arrival_rate_hz/duration_s not allowed");
    } else {
      if (!(arrival_rate_hz > 0)) throw ConfigError("server scenario: arrival rate must be > 0");
      if (!(duration_s > 0)) throw ConfigError("server scenario: duration_s must be > 0");
      if (batch_size != 0) throw ConfigError("server scenario: batch_size not allowed");
    }
    if (warmup.kind == Warmup::Kind::fixed_seconds && !(warmup.seconds >= 0))
      throw ConfigError("scenario: warmup seconds must be >= 0");
  }

  bool operator==(const ScenarioSpec&) const = default;
};

struct GenerationParams {
  double temperature = 0;
  int top_k = 0;
  double top_p = 1;
  int max_tokens = 256;
  double repetition_penalty = 1;
  int max_context = 1024;
  std::uint64_t seed = 0;

  bool operator==(const GenerationParams&) const = default;
};

// ---------------------------------------------------------------------------
// Requests

struct RequestRecord {
  double arrival_ts = 0;                // dispatch instant on the run clock
  std::optional<double> scheduled_ts;   // open-loop target; absent for batch
  std::optional<double> first_token_ts;
  std::optional<double> completion_ts;
  std::optional<double> queue_time_s;   // only when the endpoint reports it
  std::optional<double> server_ttft_s;  // endpoint-reported, for cross-checks
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool ok = true;
  std::string error;         // reason when !ok
  bool post_window = false;  // completed after the measurement window closed

  std::optional<double> ttft() const {
    if (!first_token_ts) return std::nullopt;
    return *first_token_ts - arrival_ts;
  }

  std::optional<double> e2e() const {
    if (!completion_ts) return std::nullopt;
    return *completion_ts - arrival_ts;
  }

  void validate() const {
    if (first_token_ts && *first_token_ts < arrival_ts)
      throw DataError("request: first token precedes arrival");
    if (completion_ts && *completion_ts < arrival_ts)
      throw DataError("request: completion precedes arrival");
    if (first_token_ts && completion_ts && *completion_ts < *first_token_ts)
      throw DataError("request: completion precedes first token");
    if (input_tokens < 0 || output_tokens < 0) throw DataError("request: negative token count");
    if (!ok && error.empty()) throw DataError("request: error status without reason");
  }

  bool operator==(const RequestRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Telemetry

struct TelemetrySample {
  double ts = 0;
  double power_w = 0;
  double temp_c = 0;
  double gpu_util_pct = 0;
  double mem_used_mb = 0;
  double clock_mhz = 0;

  void validate() const {
    if (!(power_w >= 0)) throw DataError("telemetry: negative power");
    if (!(gpu_util_pct >= 0 && gpu_util_pct <= 100))
      throw DataError("telemetry: utilization outside [0, 100]");
  }

  bool operator==(const TelemetrySample&) const = default;
};

struct TelemetryTrace {
  std::vector<TelemetrySample> samples;
  double nominal_rate_hz = 10;

  double period() const { return 1.0 / nominal_rate_hz; }

  void validate() const {
    if (!(nominal_rate_hz > 0)) throw DataError("trace: nominal rate must be > 0");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i].validate();
      if (i > 0 && !(samples[i].ts > samples[i - 1].ts))
        throw DataError("trace: timestamps must be strictly increasing");
    }
  }

  bool operator==(const TelemetryTrace&) const = default;
};

// ---------------------------------------------------------------------------
// Cold-down gate

struct GateConfig {
  double power_band_w = 3;
  double window_s = 30;
  double temp_max_c = 65;
  double timeout_s = 300;

  void validate() const {
    if (!(power_band_w > 0 && window_s > 0 && temp_max_c > 0 && timeout_s > 0))
      throw ConfigError("cooldown: all gate parameters must be > 0");
  }

  bool operator==(const GateConfig&) const = default;
};

struct GateVerdict {
  enum class Kind { ready, timed_out };
  Kind kind = Kind::ready;
  double at_ts = 0;

  bool ready() const { return kind == Kind::ready; }
  bool operator==(const GateVerdict&) const = default;
};

// ---------------------------------------------------------------------------
// Run records

struct MetricsBundle {
  double energy_j = 0;
  double energy_per_output_token_j = 0;
  double mean_power_w = 0;
  double throughput_tps = 0;
  double ttft_p95_s = 0;
  double e2e_p95_s = 0;
  double idle_fraction = 0;
  std::int64_t total_input_tokens = 0;
  std::int64_t total_output_tokens = 0;
  double duration_s = 0;

  bool operator==(const MetricsBundle&) const = default;
};

namespace flags {
inline constexpr std::string_view kSmoke = "smoke";
inline constexpr std::string_view kThermalTimeout = "thermal_timeout";
inline constexpr std::string_view kDispatchOverrun = "dispatch_overrun";
}  // namespace flags

struct RunRecord {
  int schema_version = kSchemaVersion;
  std::string run_id;
  int iteration = 0;  // -1 for configuration-level error records
  std::uint64_t seed = 0;
  ModelSpec model;
  GpuSpec gpu;
  ScenarioSpec scenario;
  GenerationParams gen_params;
  std::map<std::string, std::string> host_metadata;
  TelemetryTrace trace;
  std::vector<RequestRecord> requests;
  double t_start = 0;
  double t_end = 0;
  std::optional<MetricsBundle> derived;
  std::optional<GateVerdict> gate;
  std::optional<double> pre_run_power_w;  // mean power during the cold-down window
  std::vector<std::string> flags;
  bool ok = true;
  std::string error;

  bool has_flag(std::string_view f) const {
    for (const auto& x : flags)
      if (x == f) return true;
    return false;
  }

  bool operator==(const RunRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Enum <-> text

inline std::string_view to_string(GpuProfile p) {
  return p == GpuProfile::consumer ? "consumer" : "enterprise";
}
inline std::string_view to_string(ArchKind k) { return k == ArchKind::dense ? "dense" : "moe"; }
inline std::string_view to_string(ScenarioKind k) {
  return k == ScenarioKind::batch ? "batch" : "server";
}
inline std::string_view to_string(SizeCategory c) {
  switch (c) {
    case SizeCategory::small: return "small";
    case SizeCategory::medium: return "medium";
    case SizeCategory::large: return "large";
    case SizeCategory::xlarge: return "xlarge";
  }
  return "?";
}
inline std::string_view to_string(GateVerdict::Kind k) {
  return k == GateVerdict::Kind::ready ? "ready" : "timed_out";
}

inline GpuProfile parse_gpu_profile(std::string_view s) {
  if (s == "consumer") return GpuProfile::consumer;
  if (s == "enterprise") return GpuProfile::enterprise;
  throw DataError(fmt::format("unknown gpu profile '{}'", s));
}
inline ArchKind parse_arch_kind(std::string_view s) {
  if (s == "dense") return ArchKind::dense;
  if (s == "moe") return ArchKind::moe;
  throw DataError(fmt::format("unknown arch kind '{}'", s));
}
inline ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "batch") return ScenarioKind::batch;
  if (s == "server") return ScenarioKind::server;
  throw DataError(fmt::format("unknown scenario kind '{}'", s));
}
inline SizeCategory parse_size_category(std::string_view s) {
  if (s == "small") return SizeCategory::small;
  if (s == "medium") return SizeCategory::medium;
  if (s == "large") return SizeCategory::large;
  if (s == "xlarge") return SizeCategory::xlarge;
  throw DataError(fmt::format("unknown size category '{}'", s));
}
inline GateVerdict::Kind parse_gate_kind(std::string_view s) {
  if (s == "ready") return GateVerdict::Kind::ready;
  if (s == "timed_out") return GateVerdict::Kind::timed_out;
  throw DataError(fmt::format("unknown gate verdict '{}'", s));
}

}  // namespace wattbench
