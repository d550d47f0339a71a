#pragma once

// Report tables over a dataset. Each report writes <name>.csv and <name>.txt
// (aligned plain text) into the output directory. Output depends only on the
// dataset contents, so repeated runs are byte-identical.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wattbench/analysis/categories.hpp"
#include "wattbench/analysis/lmm.hpp"
#include "wattbench/analysis/model_dataset.hpp"
#include "wattbench/analysis/ols.hpp"
#include "wattbench/analysis/ranking.hpp"
#include "wattbench/analysis/selection.hpp"
#include "wattbench/analysis/table.hpp"
#include "wattbench/metrics.hpp"

namespace wattbench {

struct TextTable {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string text() const {
    std::vector<std::size_t> w(header.size(), 0);
    for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
    std::string out;
    if (!title.empty()) out += title + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      std::string l;
      for (std::size_t i = 0; i < cells.size(); ++i) l += fmt::format("{}{:<{}}", i ? "  " : "", cells[i], w[i]);
      while (!l.empty() && l.back() == ' ') l.pop_back();
      out += l + "\n";
    };
    line(header);
    std::size_t total = 0;
    for (auto x : w) total += x;
    out += std::string(total + 2 * (w.empty() ? 0 : w.size() - 1), '-') + "\n";
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline std::string num(double v) { return fmt::format("{:.6g}", v); }

struct ReportOptions {
  std::filesystem::path output_dir = ".";
  std::optional<std::string> scenario;  // default depends on the report
  std::optional<analysis::Metric> metric;
  double ttft_threshold_s = analysis::kDefaultTtftThresholdS;
  double level = 0.95;
  std::filesystem::path model_specs;  // optional metadata CSV (architectural counts)
};

inline const std::vector<std::string>& report_names() {
  static const std::vector<std::string> k = {"summary", "rankings", "categories", "selection", "scaling",
                                             "mixed_models"};
  return k;
}

namespace report_detail {

inline analysis::Metric default_metric(const std::string& scenario) {
  return scenario == "batch" ? analysis::Metric::energy_per_token : analysis::Metric::mean_power;
}

inline std::vector<std::string> scenarios_of(const std::vector<analysis::ConfigMean>& means) {
  std::set<std::string> s;
  for (const auto& m : means) s.insert(m.scenario);
  return {s.begin(), s.end()};
}

inline std::vector<TextTable> summary(const std::vector<analysis::FlatRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<MetricsBundle>> groups;
  for (const auto& r : rows) {
    MetricsBundle b;
    b.energy_j = r.energy_j;
    b.energy_per_output_token_j = r.energy_per_output_token_j;
    b.mean_power_w = r.mean_power_w;
    b.throughput_tps = r.throughput_tps;
    b.ttft_p95_s = r.ttft_p95_s;
    b.idle_fraction = r.idle_fraction;
    b.duration_s = r.duration_s;
    b.total_output_tokens = r.total_output_tokens;
    groups[{r.scenario, r.model, r.gpu}].push_back(b);
  }
  TextTable t;
  t.title = "Per-configuration summary (mean, 95% CI half-width)";
  t.header = {"scenario", "model", "gpu", "iterations", "energy_per_output_token_j", "ci", "mean_power_w", "ci",
              "ttft_p95_s", "throughput_tps", "idle_fraction"};
  for (const auto& [key, v] : groups) {
    const auto s = aggregate_experiment(v);
    auto ci = [&](const char* k) {
      const auto& m = s.metrics.at(k);
      return m.ci_half_width ? num(*m.ci_half_width) : std::string("n/a");
    };
    t.rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::to_string(s.iterations),
                      num(s.metrics.at("energy_per_output_token_j").mean), ci("energy_per_output_token_j"),
                      num(s.metrics.at("mean_power_w").mean), ci("mean_power_w"),
                      num(s.metrics.at("ttft_p95_s").mean), num(s.metrics.at("throughput_tps").mean),
                      num(s.metrics.at("idle_fraction").mean)});
  }
  return {t};
}

inline std::vector<TextTable> rankings(const std::vector<analysis::ConfigMean>& means, const ReportOptions& o) {
  TextTable t;
  t.title = "GPU ranking positions per scenario";
  t.header = {"scenario", "metric", "gpu", "first", "second", "third", "total_models"};
  std::vector<std::string> notes;
  for (const auto& sc : o.scenario ? std::vector<std::string>{*o.scenario} : scenarios_of(means)) {
    const auto metric = o.metric.value_or(default_metric(sc));
    const auto table = analysis::rank_gpus(means, metric, sc);
    for (const auto& r : table.rows)
      t.rows.push_back({sc, std::string(analysis::to_string(metric)), r.gpu, std::to_string(r.first),
                        std::to_string(r.second), std::to_string(r.third), std::to_string(r.total_models)});
  }
  return {t};
}

inline std::vector<TextTable> categories(const std::vector<analysis::ConfigMean>& means, const ReportOptions& o,
                                         const analysis::ModelLookup& lookup) {
  const auto cats = analysis::categories_from_data(means, lookup);
  TextTable t;
  t.title = "Mean per size category (dense models with full coverage)";
  t.header = {"scenario", "metric", "category", "gpu", "mean", "ci_half_width", "n_models"};
  TextTable ex;
  ex.title = "Models excluded from a category (missing on a category GPU)";
  ex.header = {"scenario", "category", "model"};
  for (const auto& sc : o.scenario ? std::vector<std::string>{*o.scenario} : scenarios_of(means)) {
    const auto metric = o.metric.value_or(default_metric(sc));
    const auto agg = analysis::aggregate_by_size_category(means, sc, metric, cats, lookup);
    for (const auto& c : agg.cells)
      t.rows.push_back({sc, std::string(analysis::to_string(metric)), std::string(to_string(c.category)), c.gpu,
                        num(c.mean), c.ci_half_width ? num(*c.ci_half_width) : "n/a", std::to_string(c.n_models)});
    for (const auto& [cat, models] : agg.excluded_models)
      for (const auto& m : models) ex.rows.push_back({sc, std::string(to_string(cat)), m});
  }
  return {t, ex};
}

inline std::vector<TextTable> selection(const std::vector<analysis::ConfigMean>& means, const ReportOptions& o,
                                        const analysis::ModelLookup& lookup) {
  const auto cats = analysis::categories_from_data(means, lookup);
  TextTable t;
  t.title = fmt::format("Lowest mean power with TTFT p95 < {} ms (selected = *)", num(o.ttft_threshold_s * 1000));
  t.header = {"scenario", "category", "gpu", "ttft_p95_ms", "mean_power_w", "selected", "savings_vs_fastest"};
  std::vector<std::string> scen;
  if (o.scenario) {
    scen = {*o.scenario};
  } else {
    for (const auto& s : scenarios_of(means))
      if (s != "batch") scen.push_back(s);
  }
  for (const auto& sc : scen) {
    for (auto cat : {SizeCategory::small, SizeCategory::medium, SizeCategory::large, SizeCategory::xlarge}) {
      const auto cands = analysis::category_candidates(means, sc, cat, cats, lookup);
      if (cands.empty()) continue;
      const auto res = analysis::select_gpu_under_ttft(cands, o.ttft_threshold_s);
      const auto fastest = std::min_element(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        return std::tie(a.ttft_p95_s, a.gpu) < std::tie(b.ttft_p95_s, b.gpu);
      });
      for (const auto& c : res.candidates_considered) {
        const bool chosen = res.chosen_gpu && *res.chosen_gpu == c.gpu;
        t.rows.push_back({sc, std::string(to_string(cat)), c.gpu, num(c.ttft_p95_s * 1000), num(c.mean_power_w),
                          chosen ? "*" : "",
                          chosen ? num(analysis::energy_savings(c.mean_power_w, fastest->mean_power_w)) : ""});
      }
    }
  }
  return {t};
}

inline std::vector<TextTable> scaling(const std::vector<analysis::ConfigMean>& means, const ReportOptions& o,
                                      const analysis::ModelLookup& lookup) {
  const auto sc = o.scenario.value_or("batch");
  std::vector<analysis::SizeEnergyPoint> pts;
  std::vector<const analysis::ConfigMean*> src;
  for (const auto& m : means) {
    if (m.scenario != sc) continue;
    const auto spec = lookup(m.model);
    if (!spec || !(m.energy_per_token_j > 0)) continue;
    pts.push_back({spec->active_params_b, m.energy_per_token_j});
    src.push_back(&m);
  }
  const auto fit = analysis::fit_loglog(pts);
  TextTable f;
  f.title = fmt::format("log-log fit of energy per token on active parameters ({})", sc);
  f.header = {"quantity", "value"};
  f.rows = {{"alpha", num(fit.alpha)},
            {"beta", num(fit.beta)},
            {"n", std::to_string(fit.n)},
            {"residual_var", num(fit.residual_var)},
            {"multiplier_10x", num(analysis::scaling_multiplier(fit.alpha, 10))}};
  TextTable out;
  out.title = fmt::format("Outliers outside the {}% prediction interval", num(o.level * 100));
  out.header = {"gpu", "model", "active_params_b", "energy_per_token_j"};
  if (fit.n >= 4) {
    for (auto i : analysis::flag_outliers(pts, fit, o.level))
      out.rows.push_back({src[i]->gpu, src[i]->model, num(pts[i].size), num(pts[i].energy)});
  }
  return {f, out};
}

inline std::vector<TextTable> mixed_models(const std::vector<analysis::ConfigMean>& means, const ReportOptions& o,
                                           const analysis::ModelLookup& lookup) {
  const auto sc = o.scenario.value_or("batch");
  const auto rows = analysis::filter_scenario(means, sc);
  TextTable t;
  t.title = fmt::format("Random-intercept mixed models by REML ({})", sc);
  t.header = {"model", "term", "coef", "std_err", "z", "p", "ci_lo", "ci_hi"};
  TextTable s;
  s.title = "Model statistics";
  s.header = {"model", "quantity", "value"};
  for (auto mode : {analysis::ModelMode::A, analysis::ModelMode::B}) {
    const std::string name = mode == analysis::ModelMode::A ? "A" : "B";
    analysis::ModelDataset ds;
    try {
      ds = analysis::build_model_dataset(rows, mode, lookup);
    } catch (const DomainError& e) {
      s.rows.push_back({name, "skipped", e.what()});
      continue;
    }
    const auto fit = analysis::fit_lmm_reml(ds.y, ds.X, ds.groups, ds.columns);
    for (const auto& term : fit.terms)
      t.rows.push_back({name, term.name, num(term.coef), num(term.std_err), num(term.z), num(term.p),
                        num(term.ci_lo), num(term.ci_hi)});
    s.rows.push_back({name, "group_var", num(fit.group_var)});
    s.rows.push_back({name, "residual_var", num(fit.residual_var)});
    s.rows.push_back({name, "reml_loglik", num(fit.reml_loglik)});
    s.rows.push_back({name, "n_obs", std::to_string(fit.n_obs)});
    s.rows.push_back({name, "n_groups", std::to_string(fit.n_groups)});
    for (const auto& w : ds.warnings) s.rows.push_back({name, "note", w});
  }
  return {t, s};
}

}  // namespace report_detail

/// Builds the named report's tables without writing them.
inline std::vector<TextTable> build_report(const std::vector<analysis::FlatRow>& rows, const std::string& name,
                                           const ReportOptions& o = {}) {
  if (std::find(report_names().begin(), report_names().end(), name) == report_names().end())
    throw ConfigError("unknown report '" + name + "'");
  if (rows.empty()) throw DataError("report: dataset has no successful runs");
  const auto means = analysis::configuration_means(rows);
  std::map<std::string, ModelSpec> overrides;
  if (!o.model_specs.empty()) overrides = analysis::read_model_specs_csv(o.model_specs);
  const auto lookup = analysis::make_model_lookup(overrides);
  if (name == "summary") return report_detail::summary(rows);
  if (name == "rankings") return report_detail::rankings(means, o);
  if (name == "categories") return report_detail::categories(means, o, lookup);
  if (name == "selection") return report_detail::selection(means, o, lookup);
  if (name == "scaling") return report_detail::scaling(means, o, lookup);
  return report_detail::mixed_models(means, o, lookup);
}

/// Writes <name>.csv (tables separated by a blank line) and <name>.txt.
inline std::vector<std::filesystem::path> generate_report(const std::filesystem::path& dataset_path,
                                                          const std::string& name, const ReportOptions& o = {}) {
  const auto tables = build_report(analysis::load_rows(dataset_path), name, o);
  std::filesystem::create_directories(o.output_dir);
  std::string csv, text;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) {
      csv += "\n";
      text += "\n";
    }
    csv += tables[i].csv();
    text += tables[i].text();
  }
  const auto csv_path = o.output_dir / (name + ".csv");
  const auto txt_path = o.output_dir / (name + ".txt");
  std::ofstream(csv_path, std::ios::binary) << csv;
  std::ofstream(txt_path, std::ios::binary) << text;
  return {csv_path, txt_path};
}

}  // namespace wattbench
