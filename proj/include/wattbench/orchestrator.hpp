#pragma once

// Campaign driver. Per (model, scenario): health check -> unmeasured warmup
// -> for each iteration: cold-down gate -> sample + dispatch -> metrics ->
// append. Configurations run one at a time; records are appended as they
// are produced so a killed campaign resumes where it stopped.

#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "wattbench/config.hpp"
#include "wattbench/dataset.hpp"
#include "wattbench/host_metadata.hpp"
#include "wattbench/loadgen.hpp"
#include "wattbench/metrics.hpp"
#include "wattbench/mock_sut.hpp"
#include "wattbench/providers.hpp"
#include "wattbench/sut.hpp"
#include "wattbench/telemetry.hpp"
#include "wattbench/thermal_gate.hpp"

namespace wattbench {

inline constexpr const char* kDatasetFileName = "runs.jsonl";

/// Stable identifier of one measured iteration; resume keys off it.
inline std::string make_run_id(std::uint64_t master_seed, const std::string& model, const std::string& gpu,
                               const std::string& scenario, int iteration) {
  return fmt::format("{:016x}", derive_seed(master_seed, fmt::format("{}/{}/{}/{}", model, gpu, scenario, iteration)));
}

/// Seed of a configuration's iteration plan.
inline std::uint64_t configuration_seed(std::uint64_t master_seed, const std::string& model,
                                        const ScenarioSpec& scenario) {
  return derive_seed(master_seed, model + "/" + scenario.label());
}

/// Shifts every timestamp so t_start is 0 (smoke records compare across runs).
inline void normalize_timestamps(RunRecord& r) {
  const double o = r.t_start;
  for (auto& s : r.trace.samples) s.ts -= o;
  for (auto& q : r.requests) {
    q.arrival_ts -= o;
    if (q.scheduled_ts) *q.scheduled_ts -= o;
    if (q.first_token_ts) *q.first_token_ts -= o;
    if (q.completion_ts) *q.completion_ts -= o;
  }
  if (r.gate) r.gate->at_ts -= o;
  r.t_end -= o;
  r.t_start = 0;
}

/// Live resources for a campaign: telemetry provider, optional in-process
/// mock SUT and the synthetic device it drives.
class RunEnvironment {
 public:
  explicit RunEnvironment(const RunConfig& cfg) {
    switch (cfg.provider) {
      case ProviderKind::synthetic:
        device_ = std::make_shared<SyntheticDevice>(cfg.device, RunClock::now());
        provider_ = std::make_unique<SyntheticProvider>(device_);
        break;
      case ProviderKind::replay:
        provider_ = std::make_unique<ReplayProvider>(read_trace_csv(cfg.replay_trace), cfg.replay_trace, true);
        break;
      case ProviderKind::device:
        provider_ = std::make_unique<NvmlProvider>();
        break;
    }
    if (!provider_->available()) throw UnavailableError("telemetry provider unavailable: " + provider_->identity());
    if (cfg.sut_endpoint == "mock") {
      auto profile = cfg.mock;
      profile.power_coupling = device_;
      mock_ = mock_serve(profile);
      base_url_ = mock_->base_url();
    } else {
      base_url_ = cfg.sut_endpoint;
    }
  }

  TelemetryProvider& provider() { return *provider_; }
  const std::string& base_url() const { return base_url_; }
  MockSut* mock() { return mock_.get(); }
  SyntheticDevice* device() { return device_.get(); }

 private:
  std::shared_ptr<SyntheticDevice> device_;
  std::unique_ptr<TelemetryProvider> provider_;
  std::unique_ptr<MockSut> mock_;
  std::string base_url_;
};

struct RunOptions {
  std::function<void(const std::string&)> log = [](const std::string&) {};
  std::filesystem::path dataset_path;  // default: <output_dir>/runs.jsonl
  bool resume = true;
};

struct CampaignResult {
  std::vector<RunRecord> records;  // produced by this invocation
  int skipped_existing = 0;
  std::filesystem::path dataset_path;
};

namespace orchestrator_detail {

using Triple = std::tuple<std::string, std::string, int>;  // model, scenario label, iteration

inline std::set<Triple> completed_triples(const std::filesystem::path& path) {
  std::set<Triple> done;
  if (!std::filesystem::exists(path)) return done;
  for (const auto& r : read_dataset(path))
    if (r.ok) done.insert({r.model.hub_handle, r.scenario.label(), r.iteration});
  return done;
}

/// Blocks on the gate, reading a dedicated sampler. Returns the verdict
/// and the mean power of the final gate window.
inline std::pair<GateVerdict, std::optional<double>> cold_down(TelemetryProvider& provider, double rate_hz,
                                                               const GateConfig& gate_cfg) {
  auto sampler = start_sampling(provider, rate_hz);
  std::size_t next = 0;
  std::vector<TelemetrySample> buffer;
  std::size_t pos = 0;
  auto source = [&]() -> std::optional<TelemetrySample> {
    while (pos >= buffer.size()) {
      if (sampler->exhausted() && next >= sampler->size()) return std::nullopt;
      const auto last = sampler->last_ts();
      sampler->wait_for_ts(last ? *last + 1e-9 : -1e300);
      auto fresh = sampler->poll(next);
      next += fresh.size();
      buffer.insert(buffer.end(), fresh.begin(), fresh.end());
    }
    return buffer[pos++];
  };
  GateVerdict v;
  try {
    v = await_ready(source, gate_cfg);
  } catch (const DomainError&) {
    const auto why = sampler->failure();
    throw UnavailableError("telemetry ended during cold-down" + (why.empty() ? std::string() : ": " + why));
  }
  auto trace = sampler->stop();
  std::optional<double> pre_power;
  const double t0 = std::max(trace.samples.front().ts, v.at_ts - gate_cfg.window_s);
  if (v.at_ts > t0) {
    try {
      pre_power = mean_power(trace, t0, v.at_ts);
    } catch (const DomainError&) {
    }
  }
  return {v, pre_power};
}

}  // namespace orchestrator_detail

inline CampaignResult run_experiment(const RunConfig& input, const RunOptions& opt = {}) {
  using namespace orchestrator_detail;
  const RunConfig cfg = input.smoke ? smoke_scaled(input) : input;
  CampaignResult out;
  std::filesystem::create_directories(cfg.output_dir);
  out.dataset_path = opt.dataset_path.empty() ? std::filesystem::path(cfg.output_dir) / kDatasetFileName
                                              : opt.dataset_path;
  auto done = opt.resume ? completed_triples(out.dataset_path) : std::set<Triple>{};
  if (!opt.resume && std::filesystem::exists(out.dataset_path)) write_dataset({}, out.dataset_path);

  RunEnvironment env(cfg);
  const auto pool = cfg.prompts.empty() ? builtin_prompts() : load_prompts(cfg.prompts);
  auto host = collect_host_metadata(env.provider().identity(), cfg.source_text, cfg.output_dir);

  auto emit = [&](RunRecord r) {
    if (r.ok) validate_record(r);
    append_record(r, out.dataset_path);
    out.records.push_back(std::move(r));
  };

  for (const auto& model : cfg.models) {
    SutEndpoint endpoint{env.base_url(), cfg.served_model.empty() ? model.hub_handle : cfg.served_model,
                         cfg.request_timeout_s};
    for (const auto& scenario : cfg.scenarios) {
      const auto label = scenario.label();
      const auto plan = plan_iterations(scenario, configuration_seed(cfg.seed, model.hub_handle, scenario), cfg.cooldown);

      auto base_record = [&](int iteration, std::uint64_t seed) {
        RunRecord r;
        r.run_id = make_run_id(cfg.seed, model.hub_handle, cfg.gpu.name, label, iteration);
        r.iteration = iteration;
        r.seed = seed;
        r.model = model;
        r.gpu = cfg.gpu;
        r.scenario = scenario;
        r.gen_params = cfg.generation;
        r.host_metadata = host;
        r.host_metadata["wall_clock_utc"] = wall_clock_utc();
        if (cfg.smoke) r.flags.emplace_back(flags::kSmoke);
        return r;
      };
      auto config_error = [&](const std::string& why) {
        opt.log(fmt::format("{} {}: skipped ({})", model.hub_handle, label, why));
        auto r = base_record(-1, 0);
        r.ok = false;
        r.error = why;
        emit(std::move(r));
      };

      std::vector<MeasuredIteration> todo;
      for (const auto& it : plan.measured) {
        if (done.contains({model.hub_handle, label, it.index})) {
          ++out.skipped_existing;
        } else {
          todo.push_back(it);
        }
      }
      if (todo.empty()) continue;

      if (!endpoint_healthy(endpoint)) {
        config_error("endpoint unreachable: " + env.base_url());
        continue;
      }

      opt.log(fmt::format("{} {}: warmup", model.hub_handle, label));
      try {
        if (scenario.kind == ScenarioKind::batch) {
          run_batch(endpoint, build_batch_workload(pool, scenario.batch_size, plan.warmup_seed), cfg.generation);
        } else if (plan.warmup.seconds > 0) {
          const auto sched = build_poisson_schedule(scenario.arrival_rate_hz, plan.warmup.seconds, plan.warmup_seed);
          if (!sched.arrival_ts.empty())
            run_server(endpoint, sched, assign_prompts(pool, sched.arrival_ts.size(), plan.warmup_seed), cfg.generation);
          else
            RunClock::sleep_until(RunClock::now() + plan.warmup.seconds);
        }
      } catch (const SutFailure& e) {
        config_error(std::string("warmup failed: ") + e.what());
        continue;
      }

      for (const auto& it : todo) {
        auto rec = base_record(it.index, it.seed);
        try {
          auto [verdict, pre_power] = cold_down(env.provider(), cfg.sampling_rate_hz, cfg.cooldown);
          rec.gate = verdict;
          rec.pre_run_power_w = pre_power;
          if (!verdict.ready()) rec.flags.emplace_back(flags::kThermalTimeout);

          auto sampler = start_sampling(env.provider(), cfg.sampling_rate_hz);
          sampler->wait_for_ts(-1e300);
          if (scenario.kind == ScenarioKind::batch) {
            const auto batch = build_batch_workload(pool, scenario.batch_size, it.seed);
            opt.log(fmt::format("{} {}: iteration {} ({} requests)", model.hub_handle, label, it.index, batch.size()));
            try {
              auto res = run_batch(endpoint, batch, cfg.generation);
              rec.requests = std::move(res.records);
              rec.t_start = res.t_dispatch;
              rec.t_end = res.t_end;
            } catch (const SutFailure& e) {
              rec.requests = e.records();
              throw;
            }
          } else {
            const auto sched = build_poisson_schedule(scenario.arrival_rate_hz, scenario.duration_s, it.seed);
            opt.log(fmt::format("{} {}: iteration {} ({} arrivals)", model.hub_handle, label, it.index,
                                sched.arrival_ts.size()));
            if (sched.arrival_ts.empty()) throw DomainError("no arrivals scheduled in the measurement window");
            const auto prompts = assign_prompts(pool, sched.arrival_ts.size(), derive_seed(it.seed, "prompts"));
            const double origin = RunClock::now() + 0.01;
            try {
              auto res = run_server(endpoint, sched, prompts, cfg.generation, origin);
              rec.requests = std::move(res.records);
              rec.t_start = res.t_origin;
              rec.t_end = res.t_window_end;
              if (res.overrun) rec.flags.emplace_back(flags::kDispatchOverrun);
            } catch (const SutFailure& e) {
              rec.requests = e.records();
              throw;
            }
          }
          sampler->wait_for_ts(rec.t_end);
          rec.trace = sampler->stop();
          if (rec.trace.samples.empty() || rec.trace.samples.back().ts < rec.t_end)
            throw UnavailableError("telemetry ended before the iteration finished");
          if (cfg.smoke) normalize_timestamps(rec);
          rec.derived = compute_run_metrics(rec);
        } catch (const Error& e) {
          rec.ok = false;
          rec.error = e.what();
          rec.derived.reset();
          opt.log(fmt::format("{} {}: iteration {} failed ({})", model.hub_handle, label, it.index, e.what()));
        }
        emit(std::move(rec));
      }
    }
  }
  return out;
}

}  // namespace wattbench
