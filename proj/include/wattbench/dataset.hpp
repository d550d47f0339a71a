#pragma once

// On-disk dataset: one JSON RunRecord per line (schema-versioned), plus a
// sidecar CSV with one flattened metrics row per successful run.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wattbench/error.hpp"
#include "wattbench/metrics.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

namespace json_detail {

using nlohmann::json;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace json_detail

inline nlohmann::json to_json(const GpuSpec& g) {
  using namespace json_detail;
  return {{"name", g.name}, {"architecture", g.architecture}, {"profile", to_string(g.profile)},
          {"memory_gb", g.memory_gb}, {"tdp_w", g.tdp_w}, {"tflops_fp16", g.tflops_fp16},
          {"mem_bw_gbs", g.mem_bw_gbs}, {"l2_cache_mb", g.l2_cache_mb},
          {"idle_power_w", opt(g.idle_power_w)}, {"release_year", g.release_year}};
}

inline GpuSpec gpu_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  GpuSpec g;
  g.name = j.at("name").get<std::string>();
  g.architecture = j.value("architecture", "");
  g.profile = parse_gpu_profile(j.value("profile", "enterprise"));
  g.memory_gb = j.at("memory_gb").get<double>();
  g.tdp_w = j.at("tdp_w").get<double>();
  g.tflops_fp16 = j.value("tflops_fp16", 0.0);
  g.mem_bw_gbs = j.value("mem_bw_gbs", 0.0);
  g.l2_cache_mb = j.value("l2_cache_mb", 0.0);
  g.idle_power_w = get_opt<double>(j, "idle_power_w");
  g.release_year = j.value("release_year", 0);
  return g;
}

inline nlohmann::json to_json(const ModelSpec& m) {
  using namespace json_detail;
  return {{"hub_handle", m.hub_handle}, {"family", m.family}, {"arch_kind", to_string(m.arch_kind)},
          {"total_params_b", m.total_params_b}, {"active_params_b", m.active_params_b},
          {"hidden_size", opt(m.hidden_size)}, {"num_layers", opt(m.num_layers)},
          {"num_attention_heads", opt(m.num_attention_heads)},
          {"num_key_value_heads", opt(m.num_key_value_heads)}};
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  ModelSpec m;
  m.hub_handle = j.at("hub_handle").get<std::string>();
  m.family = j.value("family", "");
  m.arch_kind = parse_arch_kind(j.value("arch_kind", "dense"));
  m.total_params_b = j.at("total_params_b").get<double>();
  m.active_params_b = j.at("active_params_b").get<double>();
  m.hidden_size = get_opt<int>(j, "hidden_size");
  m.num_layers = get_opt<int>(j, "num_layers");
  m.num_attention_heads = get_opt<int>(j, "num_attention_heads");
  m.num_key_value_heads = get_opt<int>(j, "num_key_value_heads");
  return m;
}

inline nlohmann::json to_json(const ScenarioSpec& s) {
  return {{"kind", to_string(s.kind)}, {"batch_size", s.batch_size}, {"arrival_rate_hz", s.arrival_rate_hz},
          {"duration_s", s.duration_s},
          {"warmup", {{"kind", s.warmup.kind == Warmup::Kind::one_batch ? "one_batch" : "fixed_seconds"},
                      {"seconds", s.warmup.seconds}}},
          {"iterations", s.iterations}};
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
  s.batch_size = j.value("batch_size", 0);
  s.arrival_rate_hz = j.value("arrival_rate_hz", 0.0);
  s.duration_s = j.value("duration_s", 0.0);
  const auto& w = j.at("warmup");
  const auto kind = w.at("kind").get<std::string>();
  if (kind == "one_batch") s.warmup.kind = Warmup::Kind::one_batch;
  else if (kind == "fixed_seconds") s.warmup.kind = Warmup::Kind::fixed_seconds;
  else throw DataError("unknown warmup kind '" + kind + "'");
  s.warmup.seconds = w.value("seconds", 0.0);
  s.iterations = j.value("iterations", 5);
  return s;
}

inline nlohmann::json to_json(const GenerationParams& p) {
  return {{"temperature", p.temperature}, {"top_k", p.top_k}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens},
          {"repetition_penalty", p.repetition_penalty}, {"max_context", p.max_context}, {"seed", p.seed}};
}

inline GenerationParams gen_params_from_json(const nlohmann::json& j) {
  GenerationParams p;
  p.temperature = j.at("temperature").get<double>();
  p.top_k = j.at("top_k").get<int>();
  p.top_p = j.at("top_p").get<double>();
  p.max_tokens = j.at("max_tokens").get<int>();
  p.repetition_penalty = j.at("repetition_penalty").get<double>();
  p.max_context = j.at("max_context").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

inline nlohmann::json to_json(const RequestRecord& r) {
  using namespace json_detail;
  return {{"arrival_ts", r.arrival_ts}, {"scheduled_ts", opt(r.scheduled_ts)},
          {"first_token_ts", opt(r.first_token_ts)}, {"completion_ts", opt(r.completion_ts)},
          {"queue_time_s", opt(r.queue_time_s)}, {"server_ttft_s", opt(r.server_ttft_s)},
          {"input_tokens", r.input_tokens}, {"output_tokens", r.output_tokens},
          {"status", r.ok ? "ok" : "error"}, {"error", r.error}, {"post_window", r.post_window}};
}

inline RequestRecord request_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  RequestRecord r;
  r.arrival_ts = j.at("arrival_ts").get<double>();
  r.scheduled_ts = get_opt<double>(j, "scheduled_ts");
  r.first_token_ts = get_opt<double>(j, "first_token_ts");
  r.completion_ts = get_opt<double>(j, "completion_ts");
  r.queue_time_s = get_opt<double>(j, "queue_time_s");
  r.server_ttft_s = get_opt<double>(j, "server_ttft_s");
  r.input_tokens = j.at("input_tokens").get<std::int64_t>();
  r.output_tokens = j.at("output_tokens").get<std::int64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "error") throw DataError("unknown request status '" + status + "'");
  r.ok = status == "ok";
  r.error = j.value("error", "");
  r.post_window = j.value("post_window", false);
  return r;
}

inline nlohmann::json to_json(const TelemetryTrace& t) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : t.samples)
    samples.push_back({s.ts, s.power_w, s.temp_c, s.gpu_util_pct, s.mem_used_mb, s.clock_mhz});
  return {{"nominal_rate_hz", t.nominal_rate_hz},
          {"columns", {"ts", "power_w", "temp_c", "gpu_util_pct", "mem_used_mb", "clock_mhz"}},
          {"samples", samples}};
}

inline TelemetryTrace trace_from_json(const nlohmann::json& j) {
  TelemetryTrace t;
  t.nominal_rate_hz = j.at("nominal_rate_hz").get<double>();
  for (const auto& row : j.at("samples")) {
    if (!row.is_array() || row.size() != 6) throw DataError("trace sample must have 6 columns");
    t.samples.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                         row[3].get<double>(), row[4].get<double>(), row[5].get<double>()});
  }
  return t;
}

inline nlohmann::json to_json(const MetricsBundle& m) {
  return {{"energy_j", m.energy_j}, {"energy_per_output_token_j", m.energy_per_output_token_j},
          {"mean_power_w", m.mean_power_w}, {"throughput_tps", m.throughput_tps},
          {"ttft_p95_s", m.ttft_p95_s}, {"e2e_p95_s", m.e2e_p95_s}, {"idle_fraction", m.idle_fraction},
          {"total_input_tokens", m.total_input_tokens}, {"total_output_tokens", m.total_output_tokens},
          {"duration_s", m.duration_s}};
}

inline MetricsBundle metrics_from_json(const nlohmann::json& j) {
  MetricsBundle m;
  m.energy_j = j.at("energy_j").get<double>();
  m.energy_per_output_token_j = j.at("energy_per_output_token_j").get<double>();
  m.mean_power_w = j.at("mean_power_w").get<double>();
  m.throughput_tps = j.at("throughput_tps").get<double>();
  m.ttft_p95_s = j.at("ttft_p95_s").get<double>();
  m.e2e_p95_s = j.at("e2e_p95_s").get<double>();
  m.idle_fraction = j.at("idle_fraction").get<double>();
  m.total_input_tokens = j.at("total_input_tokens").get<std::int64_t>();
  m.total_output_tokens = j.at("total_output_tokens").get<std::int64_t>();
  m.duration_s = j.at("duration_s").get<double>();
  return m;
}

inline nlohmann::json to_json(const RunRecord& r) {
  using namespace json_detail;
  nlohmann::json requests = nlohmann::json::array();
  for (const auto& q : r.requests) requests.push_back(to_json(q));
  nlohmann::json gate = nullptr;
  if (r.gate) gate = {{"verdict", to_string(r.gate->kind)}, {"at_ts", r.gate->at_ts}};
  return {{"schema_version", r.schema_version},
          {"run_id", r.run_id},
          {"iteration", r.iteration},
          {"seed", r.seed},
          {"status", r.ok ? "ok" : "error"},
          {"error", r.error},
          {"flags", r.flags},
          {"model", to_json(r.model)},
          {"gpu", to_json(r.gpu)},
          {"scenario", to_json(r.scenario)},
          {"gen_params", to_json(r.gen_params)},
          {"host_metadata", r.host_metadata},
          {"t_start", r.t_start},
          {"t_end", r.t_end},
          {"gate", gate},
          {"pre_run_power_w", opt(r.pre_run_power_w)},
          {"trace", to_json(r.trace)},
          {"requests", requests},
          {"derived", r.derived ? to_json(*r.derived) : nlohmann::json(nullptr)}};
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  RunRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion)
    throw DataError(fmt::format("schema version mismatch: file has {}, expected {}", r.schema_version, kSchemaVersion));
  r.run_id = j.at("run_id").get<std::string>();
  r.iteration = j.at("iteration").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "error") throw DataError("unknown run status '" + status + "'");
  r.ok = status == "ok";
  r.error = j.value("error", "");
  r.flags = j.value("flags", std::vector<std::string>{});
  r.model = model_from_json(j.at("model"));
  r.gpu = gpu_from_json(j.at("gpu"));
  r.scenario = scenario_from_json(j.at("scenario"));
  r.gen_params = gen_params_from_json(j.at("gen_params"));
  r.host_metadata = j.at("host_metadata").get<std::map<std::string, std::string>>();
  r.t_start = j.at("t_start").get<double>();
  r.t_end = j.at("t_end").get<double>();
  if (const auto& g = j.at("gate"); !g.is_null())
    r.gate = GateVerdict{parse_gate_kind(g.at("verdict").get<std::string>()), g.at("at_ts").get<double>()};
  r.pre_run_power_w = get_opt<double>(j, "pre_run_power_w");
  r.trace = trace_from_json(j.at("trace"));
  for (const auto& q : j.at("requests")) r.requests.push_back(request_from_json(q));
  if (const auto& d = j.at("derived"); !d.is_null()) r.derived = metrics_from_json(d);
  return r;
}

/// Checks every record-level invariant, including that stored metrics equal
/// their recomputation from the raw trace and requests.
inline void validate_record(const RunRecord& r) {
  if (r.schema_version != kSchemaVersion) throw DataError("schema version mismatch");
  if (r.run_id.empty()) throw DataError("record without run_id");
  try {
    r.model.validate();
    r.gpu.validate();
    r.scenario.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("record ") + r.run_id + ": " + e.what());
  }
  for (const auto& q : r.requests) q.validate();
  r.trace.validate();
  if (!r.ok) {
    if (r.error.empty()) throw DataError("record " + r.run_id + ": error status without reason");
    return;
  }
  if (!(r.t_start < r.t_end)) throw DataError("record " + r.run_id + ": t_start must precede t_end");
  if (r.trace.samples.empty()) throw DataError("record " + r.run_id + ": empty trace");
  const double slack = 0.5 * r.trace.period() + 1e-9;
  if (r.trace.samples.front().ts > r.t_start + slack || r.trace.samples.back().ts < r.t_end - slack)
    throw DataError("record " + r.run_id + ": trace does not cover [t_start, t_end]");
  if (!r.derived) throw DataError("record " + r.run_id + ": missing derived metrics");
  if (!derived_matches(r)) throw DataError("record " + r.run_id + ": derived metrics do not match recomputation");
}

// ---------------------------------------------------------------------------
// Files

inline constexpr std::string_view kFlatCsvHeader =
    "model,gpu,scenario,iteration,energy_j,energy_per_output_token_j,mean_power_w,throughput_tps,"
    "ttft_p95_s,idle_fraction,duration_s,total_output_tokens";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string flat_csv_row(const RunRecord& r) {
  const auto& m = *r.derived;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", csv_field(r.model.hub_handle), csv_field(r.gpu.name),
                     csv_field(r.scenario.label()), r.iteration, m.energy_j, m.energy_per_output_token_j,
                     m.mean_power_w, m.throughput_tps, m.ttft_p95_s, m.idle_fraction, m.duration_s,
                     m.total_output_tokens);
}

/// Sidecar CSV path: "runs.jsonl" -> "runs.csv".
inline std::filesystem::path sidecar_csv_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  return p.replace_extension(".csv");
}

/// Writes the dataset (overwriting) and its sidecar CSV.
inline void write_dataset(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  for (const auto& r : records) validate_record(r);
  std::ofstream os(path, std::ios::trunc);
  std::ofstream csv(sidecar_csv_path(path), std::ios::trunc);
  if (!os || !csv) throw DataError("cannot write dataset " + path.string());
  csv << kFlatCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_json(r).dump() << '\n';
    if (r.ok) csv << flat_csv_row(r) << '\n';
  }
}

/// Appends one record to the dataset and its sidecar (single writer).
inline void append_record(const RunRecord& r, const std::filesystem::path& path) {
  validate_record(r);
  const auto csv_path = sidecar_csv_path(path);
  const bool new_csv = !std::filesystem::exists(csv_path) || std::filesystem::file_size(csv_path) == 0;
  std::ofstream os(path, std::ios::app);
  std::ofstream csv(csv_path, std::ios::app);
  if (!os || !csv) throw DataError("cannot append to dataset " + path.string());
  if (new_csv) csv << kFlatCsvHeader << '\n';
  os << to_json(r).dump() << '\n';
  os.flush();
  if (r.ok) csv << flat_csv_row(r) << '\n';
}

inline std::vector<RunRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read dataset " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto rec = record_from_json(nlohmann::json::parse(line));
      validate_record(rec);
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}:{}: malformed record: {}", path.string(), lineno, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

}  // namespace wattbench
