#pragma once

// YAML run configuration -> fully defaulted, validated RunConfig.
//
// Top-level keys (unknown keys are rejected at every level):
//   models           list of hub handles or full model maps (required)
//   gpu              catalog name or full GPU map
//   scenarios        list of {kind, batch_size | arrival_rate_hz, duration_s, warmup_s, iterations}
//   iterations       default measured iterations per scenario (5)
//   arrival_rates    rates used for server scenarios without their own rate
//   sut_endpoint     http://host:port or "mock" (in-process mock SUT)
//   served_model     model name sent to the endpoint (default: hub handle)
//   sampling_rate_hz telemetry rate (10)
//   cooldown         {power_band_w, window_s, temp_max_c, timeout_s}
//   output_dir, seed, smoke, provider, replay_trace, prompts,
//   request_timeout_s, generation, mock, device

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wattbench/catalog.hpp"
#include "wattbench/error.hpp"
#include "wattbench/mock_sut.hpp"
#include "wattbench/synthetic_device.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

enum class ProviderKind { synthetic, replay, device };

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "synthetic") return ProviderKind::synthetic;
  if (s == "replay") return ProviderKind::replay;
  if (s == "device") return ProviderKind::device;
  throw ConfigError(fmt::format("unknown provider '{}' (expected synthetic, replay or device)", s));
}

inline std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::synthetic: return "synthetic";
    case ProviderKind::replay: return "replay";
    case ProviderKind::device: return "device";
  }
  return "?";
}

/// Durations, batch sizes and gate windows are multiplied by this in smoke mode.
inline constexpr double kSmokeFactor = 0.1;

struct RunConfig {
  std::vector<ModelSpec> models;
  GpuSpec gpu;
  std::vector<ScenarioSpec> scenarios;
  int iterations = 5;
  std::vector<double> arrival_rates{0.017, 0.3};
  std::string sut_endpoint = "mock";
  std::string served_model;  // empty: use each model's hub handle
  double request_timeout_s = 600;
  double sampling_rate_hz = 10;
  GateConfig cooldown;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  bool smoke = false;
  ProviderKind provider = ProviderKind::synthetic;
  std::string replay_trace;
  std::string prompts;  // empty: built-in pool
  GenerationParams generation;
  MockSutProfile mock;
  SyntheticDeviceProfile device;
  std::string source_text;  // raw config bytes, for fingerprinting
};

namespace config_detail {

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <class T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const auto v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("invalid value for '{}'", key));
  }
}

inline ModelSpec parse_model(const YAML::Node& n) {
  if (n.IsScalar()) {
    const auto handle = n.as<std::string>();
    if (auto m = catalog::find_model(handle)) return *m;
    throw ConfigError("model '" + handle + "' is not in the catalog; give a full model entry");
  }
  check_keys(n, {"hub_handle", "family", "arch_kind", "total_params_b", "active_params_b", "hidden_size",
                 "num_layers", "num_attention_heads", "num_key_value_heads"},
             "models[]");
  if (!n["hub_handle"]) throw ConfigError("models[]: missing hub_handle");
  ModelSpec m = catalog::find_model(n["hub_handle"].as<std::string>())
                    .value_or(ModelSpec{n["hub_handle"].as<std::string>(), "", ArchKind::dense, 0, 0, {}, {}, {}, {}});
  m.family = get<std::string>(n, "family", m.family);
  if (n["arch_kind"]) m.arch_kind = parse_arch_kind(n["arch_kind"].as<std::string>());
  m.total_params_b = get<double>(n, "total_params_b", m.total_params_b);
  m.active_params_b = get<double>(n, "active_params_b", m.arch_kind == ArchKind::dense ? m.total_params_b : m.active_params_b);
  auto opt_int = [&](const char* key, std::optional<int> cur) {
    return n[key] ? std::optional<int>(get<int>(n, key, 0)) : cur;
  };
  m.hidden_size = opt_int("hidden_size", m.hidden_size);
  m.num_layers = opt_int("num_layers", m.num_layers);
  m.num_attention_heads = opt_int("num_attention_heads", m.num_attention_heads);
  m.num_key_value_heads = opt_int("num_key_value_heads", m.num_key_value_heads);
  if (m.family.empty()) m.family = "unknown";
  m.validate();
  return m;
}

inline GpuSpec parse_gpu(const YAML::Node& n) {
  if (n.IsScalar()) {
    const auto name = n.as<std::string>();
    if (auto g = catalog::find_gpu(name)) return *g;
    throw ConfigError("gpu '" + name + "' is not in the catalog; give a full gpu entry");
  }
  check_keys(n, {"name", "architecture", "profile", "memory_gb", "tdp_w", "tflops_fp16", "mem_bw_gbs",
                 "l2_cache_mb", "idle_power_w", "release_year"},
             "gpu");
  GpuSpec g;
  g.name = get<std::string>(n, "name", "");
  g.architecture = get<std::string>(n, "architecture", "");
  if (n["profile"]) g.profile = parse_gpu_profile(n["profile"].as<std::string>());
  g.memory_gb = get<double>(n, "memory_gb", 0);
  g.tdp_w = get<double>(n, "tdp_w", 0);
  g.tflops_fp16 = get<double>(n, "tflops_fp16", 0);
  g.mem_bw_gbs = get<double>(n, "mem_bw_gbs", 0);
  g.l2_cache_mb = get<double>(n, "l2_cache_mb", 0);
  if (n["idle_power_w"]) g.idle_power_w = get<double>(n, "idle_power_w", 0);
  g.release_year = get<int>(n, "release_year", 0);
  g.validate();
  return g;
}

inline RunConfig validate(const YAML::Node& doc) {
  if (!doc || doc.IsNull()) throw ConfigError("empty configuration");
  check_keys(doc, {"models", "gpu", "scenarios", "iterations", "arrival_rates", "sut_endpoint", "served_model",
                   "request_timeout_s", "sampling_rate_hz", "cooldown", "output_dir", "seed", "smoke", "provider",
                   "replay_trace", "prompts", "generation", "mock", "device"},
             "config");
  RunConfig c;

  if (!doc["models"] || !doc["models"].IsSequence() || doc["models"].size() == 0)
    throw ConfigError("config: missing model list");
  for (const auto& m : doc["models"]) c.models.push_back(parse_model(m));

  c.iterations = get<int>(doc, "iterations", 5);
  if (c.iterations < 1) throw ConfigError("config: iterations must be >= 1");

  if (const auto rates = doc["arrival_rates"]) {
    if (!rates.IsSequence() || rates.size() == 0) throw ConfigError("config: arrival_rates must be a non-empty list");
    c.arrival_rates.clear();
    for (const auto& r : rates) c.arrival_rates.push_back(r.as<double>());
  }
  for (double r : c.arrival_rates)
    if (!(r > 0)) throw ConfigError(fmt::format("config: arrival rate {} must be > 0", r));

  auto server = [&](double rate, double duration, std::optional<double> warmup, int iterations) {
    ScenarioSpec s;
    s.kind = ScenarioKind::server;
    s.arrival_rate_hz = rate;
    s.duration_s = duration;
    s.warmup = Warmup{Warmup::Kind::fixed_seconds, warmup.value_or(60.0)};
    s.iterations = iterations;
    return s;
  };
  if (const auto list = doc["scenarios"]) {
    if (!list.IsSequence() || list.size() == 0) throw ConfigError("config: scenarios must be a non-empty list");
    for (const auto& n : list) {
      check_keys(n, {"kind", "batch_size", "arrival_rate_hz", "duration_s", "warmup_s", "iterations"}, "scenarios[]");
      if (!n["kind"]) throw ConfigError("scenarios[]: missing kind");
      const auto kind = n["kind"].as<std::string>();
      const int iterations = get<int>(n, "iterations", c.iterations);
      if (kind == "batch") {
        if (n["arrival_rate_hz"] || n["duration_s"] || n["warmup_s"])
          throw ConfigError("scenarios[]: batch scenario cannot set arrival_rate_hz, duration_s or warmup_s");
        ScenarioSpec s;
        s.kind = ScenarioKind::batch;
        s.batch_size = get<int>(n, "batch_size", 1000);
        s.warmup = Warmup{Warmup::Kind::one_batch, 0};
        s.iterations = iterations;
        c.scenarios.push_back(s);
      } else if (kind == "server") {
        if (n["batch_size"]) throw ConfigError("scenarios[]: server scenario cannot set batch_size");
        const double duration = get<double>(n, "duration_s", 300.0);
        std::optional<double> warmup;
        if (n["warmup_s"]) warmup = get<double>(n, "warmup_s", 60.0);
        if (n["arrival_rate_hz"]) {
          c.scenarios.push_back(server(get<double>(n, "arrival_rate_hz", 0.0), duration, warmup, iterations));
        } else {
          for (double r : c.arrival_rates) c.scenarios.push_back(server(r, duration, warmup, iterations));
        }
      } else {
        throw ConfigError("scenarios[]: unknown kind '" + kind + "'");
      }
    }
  } else {
    ScenarioSpec b;
    b.kind = ScenarioKind::batch;
    b.batch_size = 1000;
    b.iterations = c.iterations;
    c.scenarios.push_back(b);
    for (double r : c.arrival_rates) c.scenarios.push_back(server(r, 300.0, std::nullopt, c.iterations));
  }
  for (const auto& s : c.scenarios) s.validate();

  c.sut_endpoint = get<std::string>(doc, "sut_endpoint", "mock");
  c.served_model = get<std::string>(doc, "served_model", "");
  c.request_timeout_s = get<double>(doc, "request_timeout_s", 600.0);
  if (!(c.request_timeout_s > 0)) throw ConfigError("config: request_timeout_s must be > 0");
  if (c.sut_endpoint != "mock" && c.sut_endpoint.rfind("http://", 0) != 0)
    throw ConfigError("config: sut_endpoint must be an http:// URL or 'mock'");

  c.sampling_rate_hz = get<double>(doc, "sampling_rate_hz", 10.0);
  if (!(c.sampling_rate_hz > 0)) throw ConfigError("config: sampling_rate_hz must be > 0");

  if (const auto cd = doc["cooldown"]) {
    check_keys(cd, {"power_band_w", "window_s", "temp_max_c", "timeout_s"}, "cooldown");
    c.cooldown.power_band_w = get<double>(cd, "power_band_w", 3.0);
    c.cooldown.window_s = get<double>(cd, "window_s", 30.0);
    c.cooldown.temp_max_c = get<double>(cd, "temp_max_c", 65.0);
    c.cooldown.timeout_s = get<double>(cd, "timeout_s", 300.0);
  }
  c.cooldown.validate();

  if (const char* env = std::getenv("WATTBENCH_OUTPUT_DIR"); env && *env) c.output_dir = env;
  c.output_dir = get<std::string>(doc, "output_dir", c.output_dir);
  c.seed = get<std::uint64_t>(doc, "seed", 0);
  c.smoke = get<bool>(doc, "smoke", false);
  c.provider = parse_provider_kind(get<std::string>(doc, "provider", "synthetic"));
  c.replay_trace = get<std::string>(doc, "replay_trace", "");
  if (c.provider == ProviderKind::replay && c.replay_trace.empty())
    throw ConfigError("config: provider 'replay' requires replay_trace");
  c.prompts = get<std::string>(doc, "prompts", "");

  if (const auto g = doc["generation"]) {
    check_keys(g, {"temperature", "top_k", "top_p", "max_tokens", "repetition_penalty", "max_context"}, "generation");
    c.generation.temperature = get<double>(g, "temperature", 0.0);
    c.generation.top_k = get<int>(g, "top_k", 0);
    c.generation.top_p = get<double>(g, "top_p", 1.0);
    c.generation.max_tokens = get<int>(g, "max_tokens", 256);
    c.generation.repetition_penalty = get<double>(g, "repetition_penalty", 1.0);
    c.generation.max_context = get<int>(g, "max_context", 1024);
  }
  if (c.generation.max_tokens < 1) throw ConfigError("generation: max_tokens must be >= 1");
  c.generation.seed = c.seed;

  if (const auto m = doc["mock"]) {
    check_keys(m, {"prefill_a_s", "prefill_b_s_per_token", "decode_rate_tps", "concurrency_cap", "output_tokens",
                   "chunk_interval_s", "worker_threads"},
               "mock");
    c.mock.prefill_a_s = get<double>(m, "prefill_a_s", c.mock.prefill_a_s);
    c.mock.prefill_b_s_per_token = get<double>(m, "prefill_b_s_per_token", c.mock.prefill_b_s_per_token);
    c.mock.decode_rate_tps = get<double>(m, "decode_rate_tps", c.mock.decode_rate_tps);
    c.mock.concurrency_cap = get<int>(m, "concurrency_cap", c.mock.concurrency_cap);
    c.mock.output_tokens = get<int>(m, "output_tokens", c.mock.output_tokens);
    c.mock.chunk_interval_s = get<double>(m, "chunk_interval_s", c.mock.chunk_interval_s);
    c.mock.worker_threads = get<int>(m, "worker_threads", c.mock.worker_threads);
  }
  c.mock.validate();

  if (const auto d = doc["device"]) {
    check_keys(d, {"name", "idle_power_w", "max_power_w", "power_rise_tau_s", "power_fall_tau_s", "temp_idle_c",
                   "temp_max_c", "temp_tau_s", "noise_std_w", "seed"},
               "device");
    auto& p = c.device;
    p.name = get<std::string>(d, "name", p.name);
    p.idle_power_w = get<double>(d, "idle_power_w", p.idle_power_w);
    p.max_power_w = get<double>(d, "max_power_w", p.max_power_w);
    p.power_rise_tau_s = get<double>(d, "power_rise_tau_s", p.power_rise_tau_s);
    p.power_fall_tau_s = get<double>(d, "power_fall_tau_s", p.power_fall_tau_s);
    p.temp_idle_c = get<double>(d, "temp_idle_c", p.temp_idle_c);
    p.temp_max_c = get<double>(d, "temp_max_c", p.temp_max_c);
    p.temp_tau_s = get<double>(d, "temp_tau_s", p.temp_tau_s);
    p.noise_std_w = get<double>(d, "noise_std_w", p.noise_std_w);
    p.seed = get<std::uint64_t>(d, "seed", c.seed);
  } else {
    c.device.seed = c.seed;
  }
  c.device.validate();

  if (doc["gpu"]) {
    c.gpu = parse_gpu(doc["gpu"]);
  } else if (c.provider == ProviderKind::synthetic) {
    c.gpu = GpuSpec{"synthetic:" + c.device.name, "synthetic", GpuProfile::enterprise, 24, c.device.max_power_w,
                    0, 0, 0, std::nullopt, 0};
  } else {
    throw ConfigError("config: gpu is required for replay and device providers");
  }
  return c;
}

}  // namespace config_detail

/// Validates a parsed YAML document and fills every default.
inline RunConfig validate_config(const YAML::Node& doc) {
  try {
    return config_detail::validate(doc);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline RunConfig validate_config_text(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  auto c = validate_config(doc);
  c.source_text = text;
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return validate_config_text(buf.str());
}

/// Smoke mode: shrink durations, batch sizes and the gate so a full campaign
/// runs in CI; records produced this way carry the "smoke" flag.
inline RunConfig smoke_scaled(RunConfig c) {
  c.smoke = true;
  for (auto& s : c.scenarios) {
    if (s.kind == ScenarioKind::batch) {
      s.batch_size = std::max(1, static_cast<int>(std::lround(s.batch_size * kSmokeFactor)));
    } else {
      s.duration_s *= kSmokeFactor;
      s.warmup.seconds *= kSmokeFactor;
    }
  }
  c.cooldown.window_s *= kSmokeFactor;
  c.cooldown.timeout_s *= kSmokeFactor;
  return c;
}

}  // namespace wattbench
