#pragma once

// Design matrices for the two scaling models over batch configuration means:
//   A: log E ~ 1 + log P + family one-hot
//   B: A + residualized, standardized layers / hidden / heads / kv-heads
// Groups are GPU names (random intercept per GPU).

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wattbench/analysis/ols.hpp"
#include "wattbench/analysis/table.hpp"
#include "wattbench/catalog.hpp"

namespace wattbench::analysis {

enum class ModelMode { A, B };

using ModelLookup = std::function<std::optional<ModelSpec>(const std::string&)>;

struct ModelDataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> groups;
  std::vector<std::string> columns;
  std::vector<std::string> row_models;
  std::vector<std::string> warnings;  // excluded rows, singleton families
};

inline constexpr const char* kLogParamsColumn = "log_params";

inline std::vector<std::string> architecture_columns() {
  return {"num_layers_resid", "hidden_size_resid", "num_attention_heads_resid", "num_key_value_heads_resid"};
}

inline ModelDataset build_model_dataset(const std::vector<ConfigMean>& means, ModelMode mode,
                                        const ModelLookup& lookup) {
  struct Row {
    const ConfigMean* m;
    ModelSpec spec;
  };
  ModelDataset out;
  std::vector<Row> rows;
  for (const auto& m : means) {
    auto spec = lookup(m.model);
    if (!spec) {
      out.warnings.push_back("excluded " + m.model + " on " + m.gpu + ": unknown model");
      continue;
    }
    if (!(m.energy_per_token_j > 0)) {
      out.warnings.push_back("excluded " + m.model + " on " + m.gpu + ": non-positive energy per token");
      continue;
    }
    if (mode == ModelMode::B && !spec->has_architecture()) {
      out.warnings.push_back("excluded " + m.model + " on " + m.gpu + ": missing architectural fields");
      continue;
    }
    rows.push_back({&m, *spec});
  }
  if (rows.empty()) throw DomainError("build_model_dataset: no usable rows");

  std::map<std::string, int> family_count;
  for (const auto& r : rows) ++family_count[r.spec.family];
  for (const auto& [f, k] : family_count)
    if (k == 1) out.warnings.push_back("family " + f + " has a single observation (retained)");
  // Reference level is the first family alphabetically.
  std::vector<std::string> levels;
  for (const auto& [f, _] : family_count) levels.push_back(f);

  const auto n = static_cast<Eigen::Index>(rows.size());
  std::vector<double> log_p(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) log_p[i] = std::log(rows[i].spec.active_params_b);

  out.columns = {"Intercept", kLogParamsColumn};
  for (std::size_t k = 1; k < levels.size(); ++k) out.columns.push_back("family[T." + levels[k] + "]");
  std::vector<std::vector<double>> arch;
  if (mode == ModelMode::B) {
    auto feature = [&](auto get) {
      std::vector<double> z;
      for (const auto& r : rows) z.push_back(static_cast<double>(get(r.spec)));
      return standardize(residualize(z, log_p));
    };
    arch.push_back(feature([](const ModelSpec& s) { return *s.num_layers; }));
    arch.push_back(feature([](const ModelSpec& s) { return *s.hidden_size; }));
    arch.push_back(feature([](const ModelSpec& s) { return *s.num_attention_heads; }));
    arch.push_back(feature([](const ModelSpec& s) { return *s.num_key_value_heads; }));
    for (const auto& c : architecture_columns()) out.columns.push_back(c);
  }

  out.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(out.columns.size()));
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i];
    out.y(i) = std::log(r.m->energy_per_token_j);
    out.X(i, 0) = 1.0;
    out.X(i, 1) = log_p[i];
    for (std::size_t k = 1; k < levels.size(); ++k)
      if (r.spec.family == levels[k]) out.X(i, static_cast<Eigen::Index>(1 + k)) = 1.0;
    const auto base = static_cast<Eigen::Index>(1 + levels.size());
    for (std::size_t a = 0; a < arch.size(); ++a) out.X(i, base + static_cast<Eigen::Index>(a)) = arch[a][i];
    out.groups.push_back(r.m->gpu);
    out.row_models.push_back(r.m->model);
  }
  return out;
}

/// Model metadata table: hub_handle,family,arch_kind,total_params_b,active_params_b,
/// hidden_size,num_layers,num_attention_heads,num_key_value_heads (blank = absent).
inline std::map<std::string, ModelSpec> read_model_specs_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError(path.string() + ": empty csv");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"hub_handle", "family", "arch_kind", "total_params_b", "active_params_b"})
    if (!col.contains(need)) throw DataError(fmt::format("{}: missing column '{}'", path.string(), need));
  std::map<std::string, ModelSpec> out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw DataError(path.string() + ": wrong field count");
    auto opt_int = [&](const char* name) -> std::optional<int> {
      if (!col.contains(name) || f[col.at(name)].empty()) return std::nullopt;
      return std::stoi(f[col.at(name)]);
    };
    ModelSpec m;
    m.hub_handle = f[col.at("hub_handle")];
    m.family = f[col.at("family")];
    m.arch_kind = parse_arch_kind(f[col.at("arch_kind")]);
    m.total_params_b = std::stod(f[col.at("total_params_b")]);
    m.active_params_b = std::stod(f[col.at("active_params_b")]);
    m.hidden_size = opt_int("hidden_size");
    m.num_layers = opt_int("num_layers");
    m.num_attention_heads = opt_int("num_attention_heads");
    m.num_key_value_heads = opt_int("num_key_value_heads");
    m.validate();
    out[m.hub_handle] = m;
  }
  return out;
}

/// Overrides first, then the built-in catalog.
inline ModelLookup make_model_lookup(std::map<std::string, ModelSpec> overrides = {}) {
  return [overrides = std::move(overrides)](const std::string& h) -> std::optional<ModelSpec> {
    if (auto it = overrides.find(h); it != overrides.end()) return it->second;
    return catalog::find_model(h);
  };
}

}  // namespace wattbench::analysis
