#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wattbench/wattbench.hpp"

namespace fixtures {

using namespace wattbench;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("wattbench-test-{}-{}", ::getpid(), counter.fetch_add(1));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline TelemetrySample sample(double ts, double power, double temp = 40.0) {
  TelemetrySample s;
  s.ts = ts;
  s.power_w = power;
  s.temp_c = temp;
  return s;
}

/// Samples at t0 + i / rate for i = 0..n-1 with power f(t).
template <class F>
TelemetryTrace trace_of(double t0, double t1, double rate, F f) {
  TelemetryTrace t;
  t.nominal_rate_hz = rate;
  const auto n = static_cast<long>(std::llround((t1 - t0) * rate));
  for (long i = 0; i <= n; ++i) {
    const double ts = t0 + static_cast<double>(i) / rate;
    t.samples.push_back(sample(ts, f(ts)));
  }
  return t;
}

inline ModelSpec dense_model(const std::string& handle, const std::string& family, double params) {
  return ModelSpec{handle, family, ArchKind::dense, params, params, std::nullopt, std::nullopt, std::nullopt,
                   std::nullopt};
}

inline GpuSpec gpu(const std::string& name, double memory_gb, double tdp = 300) {
  GpuSpec g;
  g.name = name;
  g.architecture = "test";
  g.memory_gb = memory_gb;
  g.tdp_w = tdp;
  return g;
}

/// A complete, valid batch RunRecord: constant power over [0, duration],
/// `n` successful requests with the given output tokens each.
inline RunRecord batch_record(const std::string& model = "m", const std::string& gpu_name = "G", int iteration = 0,
                              double power = 100.0, double duration = 10.0, int n = 4, std::int64_t tokens = 50) {
  RunRecord r;
  r.run_id = fmt::format("{}-{}-{}", model, gpu_name, iteration);
  r.iteration = iteration;
  r.seed = 42;
  r.model = dense_model(model, "llama", 8.0);
  r.gpu = gpu(gpu_name, 24);
  r.scenario.kind = ScenarioKind::batch;
  r.scenario.batch_size = n;
  r.host_metadata = {{"cpu_model", "test"}};
  r.trace = trace_of(0.0, duration, 10.0, [&](double) { return power; });
  for (int i = 0; i < n; ++i) {
    RequestRecord q;
    q.arrival_ts = 0.0;
    q.first_token_ts = 0.5 + 0.1 * i;
    q.completion_ts = duration * (i + 1) / n;
    q.input_tokens = 20;
    q.output_tokens = tokens;
    r.requests.push_back(q);
  }
  r.t_start = 0.0;
  r.t_end = duration;
  r.derived = compute_run_metrics(r);
  return r;
}

/// Flat row for analysis fixtures.
inline analysis::FlatRow row(const std::string& model, const std::string& gpu_name, const std::string& scenario,
                             int iteration, double ept, double power = 100.0, double ttft = 0.05) {
  analysis::FlatRow r;
  r.model = model;
  r.gpu = gpu_name;
  r.scenario = scenario;
  r.iteration = iteration;
  r.energy_per_output_token_j = ept;
  r.mean_power_w = power;
  r.ttft_p95_s = ttft;
  r.energy_j = ept * 1000;
  r.throughput_tps = 100;
  r.duration_s = 10;
  r.total_output_tokens = 1000;
  return r;
}

}  // namespace fixtures
