#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cptlab/cpt.hpp"
#include "cptlab/errors.hpp"
#include "cptlab/innovations.hpp"
#include "cptlab/lemmas.hpp"
#include "cptlab/market.hpp"
#include "cptlab/optimize.hpp"

namespace cptlab::cli {

using nlohmann::json;

// Schema violation; the message starts with the offending field path.
class SchemaError : public ConfigError {
 public:
  SchemaError(const std::string& path, const std::string& message) : ConfigError(path + ": " + message) {}
};

// Typed, path-aware view of one JSON object. finish() rejects keys that were
// never read, so typos surface as schema errors instead of silent defaults.
class Fields {
 public:
  Fields(const json& object, std::string path);

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  Fields object(const std::string& key);
  const json& raw(const std::string& key);

  void finish() const;

 private:
  const json& at(const std::string& key);

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

// {"root": {"S": [...], "children": [{"p": 0.5 | "1/2", "S": [...], "B": 0, "children": [...]}]}}
ScenarioTree parse_tree(const json& j, const std::string& path = "config");
json tree_to_json(const ScenarioTree& tree);

// {"preset": "linear" | "tk92"} or {"power": {"alpha", "beta", "gamma", "delta", "k_plus", "k_minus"}}
CptSpec parse_spec(const json& j, const std::string& path = "config");

// {"nodes": {"<id>": [...]}} or {"flat": [...]} over decision nodes.
Strategy parse_strategy(const json& j, const ScenarioTree& tree, const std::string& path = "config");
json strategy_to_json(const ScenarioTree& tree, const Strategy& theta);

OptimizeConfig parse_optimize_config(const json& j, const std::string& path = "config");
StressFamily parse_family(const json& j, const std::string& path = "config");

// {"preset": "product_normal", "dim", "half_width"}
// {"preset": "correlated_normal", "mean", "cov", "half_width"}
// {"grid_file": "path"}; optional "nodes" (odd) for every form.
JointDensity parse_density(const json& j, const std::string& path = "config");

}  // namespace cptlab::cli
