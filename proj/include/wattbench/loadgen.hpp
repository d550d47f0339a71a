#pragma once

// Workload construction: Poisson arrival schedules, batch workloads, the
// per-configuration iteration plan and prompt loading. Everything here is
// materialized up front so that dispatch never depends on responses.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wattbench/error.hpp"
#include "wattbench/rng.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

struct ArrivalSchedule {
  std::vector<double> arrival_ts;  // seconds from iteration start, sorted
  double rate_hz = 0;
  double duration_s = 0;
  std::uint64_t seed = 0;

  bool operator==(const ArrivalSchedule&) const = default;
};

/// Cumulative sums of i.i.d. Exponential(rate) gaps drawn from
/// Xoshiro256(seed) by inverse CDF, truncated at duration_s.
inline ArrivalSchedule build_poisson_schedule(double rate_hz, double duration_s, std::uint64_t seed) {
  if (!(rate_hz > 0)) throw DomainError("poisson schedule: rate must be > 0");
  if (!(duration_s > 0)) throw DomainError("poisson schedule: duration must be > 0");
  ArrivalSchedule s{{}, rate_hz, duration_s, seed};
  Xoshiro256 rng(seed);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate_hz);
    if (t >= duration_s) break;
    s.arrival_ts.push_back(t);
  }
  return s;
}

/// Seeded permutation of the pool.
inline std::vector<std::string> shuffled_pool(const std::vector<std::string>& pool, std::uint64_t seed) {
  std::vector<std::string> out = pool;
  Xoshiro256 rng(seed);
  rng.shuffle(std::span<std::string>(out));
  return out;
}

/// Round-robin assignment of `count` prompts through the seeded-shuffled
/// pool. Used both for batch workloads and for server arrivals.
inline std::vector<std::string> assign_prompts(const std::vector<std::string>& pool, std::size_t count,
                                               std::uint64_t seed) {
  if (pool.empty()) throw DomainError("prompt pool is empty");
  const auto order = shuffled_pool(pool, seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(order[i % order.size()]);
  return out;
}

/// The first batch_size prompts in seeded order; cycles when the pool is smaller.
inline std::vector<std::string> build_batch_workload(const std::vector<std::string>& pool, int batch_size,
                                                     std::uint64_t seed) {
  if (batch_size < 1) throw DomainError("batch workload: batch_size must be >= 1");
  return assign_prompts(pool, static_cast<std::size_t>(batch_size), seed);
}

struct MeasuredIteration {
  int index = 0;
  ScenarioSpec scenario;
  std::uint64_t seed = 0;
};

struct IterationPlan {
  Warmup warmup;
  std::uint64_t warmup_seed = 0;
  std::vector<MeasuredIteration> measured;
  GateConfig cooldown_between;
};

inline constexpr double kServerWarmupSeconds = 60.0;
inline constexpr double kServerIterationSeconds = 300.0;
inline constexpr int kDefaultIterations = 5;

/// Warmup is one batch for batch scenarios and a fixed 60 s run (same rate)
/// for server scenarios. Per-iteration seeds come from a SplitMix64 stream
/// over the master seed, so they are distinct and reproducible.
inline IterationPlan plan_iterations(const ScenarioSpec& scenario, std::uint64_t master_seed,
                                     GateConfig cooldown = {}) {
  scenario.validate();
  cooldown.validate();
  IterationPlan plan;
  plan.cooldown_between = cooldown;
  if (scenario.kind == ScenarioKind::batch) {
    plan.warmup = Warmup{Warmup::Kind::one_batch, 0};
  } else {
    plan.warmup = scenario.warmup.kind == Warmup::Kind::fixed_seconds
                      ? scenario.warmup
                      : Warmup{Warmup::Kind::fixed_seconds, kServerWarmupSeconds};
  }
  SplitMix64 seeds(master_seed);
  plan.warmup_seed = seeds.next();
  for (int i = 0; i < scenario.iterations; ++i) plan.measured.push_back({i, scenario, seeds.next()});
  return plan;
}

// ---------------------------------------------------------------------------
// Prompt pools

/// SQuAD v1.1 question rendered with its context paragraph.
inline std::string render_squad_prompt(const std::string& context, const std::string& question) {
  return "Context: " + context + "\nQuestion: " + question + "\nAnswer:";
}

inline std::vector<std::string> parse_squad(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array())
    throw DataError("squad: missing 'data' array");
  std::vector<std::string> out;
  for (const auto& article : doc["data"]) {
    if (!article.contains("paragraphs")) throw DataError("squad: article without paragraphs");
    for (const auto& para : article["paragraphs"]) {
      const auto& context = para.at("context").get_ref<const std::string&>();
      for (const auto& qa : para.at("qas")) out.push_back(render_squad_prompt(context, qa.at("question").get<std::string>()));
    }
  }
  return out;
}

/// Loads a SQuAD v1.1 JSON file or a plain one-prompt-per-line text file
/// (blank lines skipped). File order is preserved.
inline std::vector<std::string> load_prompts(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read prompt file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const auto first = std::find_if(text.begin(), text.end(), [](unsigned char c) { return !std::isspace(c); });
  if (first == text.end()) throw DataError("prompt file is empty: " + path);

  std::vector<std::string> prompts;
  if (*first == '{') {
    try {
      prompts = parse_squad(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("invalid SQuAD file " + path + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
      prompts.push_back(line);
    }
  }
  if (prompts.empty()) throw DataError("no prompts found in " + path);
  return prompts;
}

/// Deterministic stand-in pool for desk runs without a prompt file.
inline std::vector<std::string> builtin_prompts(std::size_t n = 64) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back("Context: Paragraph " + std::to_string(i) +
                  " describes a benchmark of language model inference energy on graphics processors.\n"
                  "Question: What is described in paragraph " + std::to_string(i) + "?\nAnswer:");
  return out;
}

}  // namespace wattbench
