// Command-line front end. Exit codes: 0 ok, 2 configuration error,
// 3 runtime failure.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "wattbench/wattbench.hpp"

namespace {

using namespace wattbench;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

std::string default_output() {
  if (const char* env = std::getenv("WATTBENCH_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& output,
            const std::optional<std::uint64_t>& seed, bool smoke, const std::optional<std::string>& endpoint,
            const std::optional<std::string>& provider, bool fresh) {
  auto cfg = load_config(config_path);
  if (output) cfg.output_dir = *output;
  if (seed) {
    cfg.seed = *seed;
    cfg.generation.seed = *seed;
  }
  if (smoke) cfg.smoke = true;
  if (endpoint) cfg.sut_endpoint = *endpoint;
  if (provider) cfg.provider = parse_provider_kind(*provider);
  RunOptions opt;
  opt.resume = !fresh;
  opt.log = [](const std::string& line) { std::cerr << line << '\n'; };
  const auto res = run_experiment(cfg, opt);
  int failed = 0;
  for (const auto& r : res.records) failed += r.ok ? 0 : 1;
  fmt::print("{} records written to {} ({} failed, {} already present)\n", res.records.size(),
             res.dataset_path.string(), failed, res.skipped_existing);
  return 0;
}

int cmd_report(const std::string& dataset, const std::string& name, const std::string& output,
               const std::optional<std::string>& scenario, const std::optional<std::string>& metric,
               double threshold_ms, const std::string& models) {
  ReportOptions o;
  o.output_dir = output;
  o.scenario = scenario;
  if (metric) o.metric = analysis::parse_metric(*metric);
  o.ttft_threshold_s = threshold_ms / 1000.0;
  o.model_specs = models;
  const auto names = name == "all" ? report_names() : std::vector<std::string>{name};
  for (const auto& n : names) {
    try {
      for (const auto& p : generate_report(dataset, n, o)) fmt::print("{}\n", p.string());
    } catch (const DomainError& e) {
      // "all" keeps going past reports this dataset cannot support.
      if (names.size() == 1) throw;
      fmt::print(stderr, "{}: skipped ({})\n", n, e.what());
    }
  }
  return 0;
}

int cmd_mock(const std::optional<std::string>& config_path, const std::string& host, int port) {
  MockSutProfile profile;
  if (config_path) {
    const auto cfg = load_config(*config_path);
    profile = cfg.mock;
  }
  auto sut = mock_serve(profile, host, port);
  fmt::print("mock SUT listening on {}\n", sut->base_url());
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  sut->stop();
  fmt::print("served {} requests\n", sut->requests_served());
  return 0;
}

int cmd_replay(const std::string& trace_path, std::optional<double> t0, std::optional<double> t1, bool gate) {
  const auto trace = read_trace_csv(trace_path);
  trace.validate();
  if (trace.samples.size() < 2) throw DataError("replay: trace needs at least 2 samples");
  const double a = t0.value_or(trace.samples.front().ts);
  const double b = t1.value_or(trace.samples.back().ts);
  const double e = integrate_energy(trace, a, b);
  fmt::print("samples: {}\nnominal_rate_hz: {}\nwindow_s: [{}, {}]\nenergy_j: {}\nmean_power_w: {}\n",
             trace.samples.size(), trace.nominal_rate_hz, a, b, e, e / (b - a));
  if (gate) {
    ThermalGate g{GateConfig{}};
    std::optional<GateVerdict> v;
    for (const auto& s : trace.samples)
      if ((v = g.step(s))) break;
    if (v)
      fmt::print("gate: {} at {}\n", to_string(v->kind), v->at_ts);
    else
      fmt::print("gate: no verdict (trace too short)\n");
  }
  return 0;
}

int cmd_validate(const std::optional<std::string>& config_path, const std::optional<std::string>& dataset) {
  if (!config_path && !dataset) throw ConfigError("validate: give --config and/or --dataset");
  if (config_path) {
    const auto cfg = load_config(*config_path);
    std::size_t iterations = 0;
    for (const auto& s : cfg.scenarios) iterations += static_cast<std::size_t>(s.iterations);
    fmt::print("config ok: {} models, {} scenarios, {} measured iterations per model\n", cfg.models.size(),
               cfg.scenarios.size(), iterations);
  }
  if (dataset) {
    const auto records = read_dataset(*dataset);
    std::size_t ok = 0;
    for (const auto& r : records) ok += r.ok ? 1 : 0;
    fmt::print("dataset ok: {} records ({} successful)\n", records.size(), ok);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wattbench: energy and latency benchmark harness for LLM inference endpoints"};
  app.set_version_flag("--version", WATTBENCH_VERSION);
  app.require_subcommand(1);

  std::string config_path, dataset, report_name = "all", trace_path, host = "127.0.0.1", models_csv;
  std::optional<std::string> output, endpoint, provider, scenario, metric, opt_config, opt_dataset;
  std::optional<std::uint64_t> seed;
  std::optional<double> t0, t1;
  bool smoke = false, fresh = false, gate = false;
  double threshold_ms = 70.0;
  int port = 8000;

  auto* run = app.add_subcommand("run", "execute a benchmark campaign from a config file");
  run->add_option("--config", config_path, "YAML configuration")->required();
  run->add_option("--output", output, "output directory (default: config, then $WATTBENCH_OUTPUT_DIR)");
  run->add_option("--seed", seed, "master seed override");
  run->add_flag("--smoke", smoke, "scaled-down CI run; records are flagged smoke");
  run->add_option("--endpoint", endpoint, "SUT base URL override, or 'mock'");
  run->add_option("--provider", provider, "telemetry provider")->check(CLI::IsMember({"synthetic", "replay", "device"}));
  run->add_flag("--fresh", fresh, "discard an existing dataset instead of resuming");

  auto* analyze = app.add_subcommand("analyze", "per-configuration summary of a dataset");
  analyze->add_option("--dataset", dataset, "runs.jsonl or flat CSV")->required();
  analyze->add_option("--output", output, "output directory");

  auto* report = app.add_subcommand("report", "generate report tables");
  report->add_option("--dataset", dataset, "runs.jsonl or flat CSV")->required();
  report->add_option("--report", report_name, "summary, rankings, categories, selection, scaling, mixed_models or all");
  report->add_option("--output", output, "output directory");
  report->add_option("--scenario", scenario, "scenario label, e.g. batch or server@0.3");
  report->add_option("--metric", metric, "metric column to rank or aggregate");
  report->add_option("--threshold-ms", threshold_ms, "TTFT p95 threshold for selection");
  report->add_option("--models", models_csv, "model metadata CSV with architectural counts");

  auto* mock = app.add_subcommand("mock-sut", "serve the mock OpenAI-compatible endpoint");
  mock->add_option("--config", opt_config, "take the mock profile from a config file");
  mock->add_option("--host", host);
  mock->add_option("--port", port);

  auto* replay = app.add_subcommand("replay", "integrate and gate a recorded telemetry trace");
  replay->add_option("--trace", trace_path, "trace CSV")->required();
  replay->add_option("--t0", t0);
  replay->add_option("--t1", t1);
  replay->add_flag("--gate", gate, "also run the default cold-down gate over the trace");

  auto* validate = app.add_subcommand("validate", "validate a config and/or dataset");
  validate->add_option("--config", opt_config);
  validate->add_option("--dataset", opt_dataset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, output, seed, smoke, endpoint, provider, fresh);
    if (*analyze) return cmd_report(dataset, "summary", output.value_or(default_output()), std::nullopt, std::nullopt, 70.0, "");
    if (*report) return cmd_report(dataset, report_name, output.value_or(default_output()), scenario, metric, threshold_ms, models_csv);
    if (*mock) return cmd_mock(opt_config, host, port);
    if (*replay) return cmd_replay(trace_path, t0, t1, gate);
    if (*validate) return cmd_validate(opt_config, opt_dataset);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
  return 0;
}
