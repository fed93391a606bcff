#include "cptlab_cli/schema.hpp"

#include <cmath>

namespace cptlab::cli {

namespace {

std::string type_name(const json& j) { return j.type_name(); }

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers, got " + type_name(j));
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

}  // namespace

Fields::Fields(const json& object, std::string path) : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw SchemaError(path_, "expected an object, got " + type_name(object_));
}

bool Fields::has(const std::string& key) const { return object_.contains(key); }

const json& Fields::at(const std::string& key) {
  seen_.insert(key);
  if (!object_.contains(key)) throw SchemaError(path_ + "." + key, "required field is missing");
  return object_.at(key);
}

const json& Fields::raw(const std::string& key) { return at(key); }

double Fields::number(const std::string& key) {
  const json& v = at(key);
  if (!v.is_number()) throw SchemaError(path_ + "." + key, "expected a number, got " + type_name(v));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path_ + "." + key, "must be finite");
  return d;
}

double Fields::number(const std::string& key, double fallback) { return has(key) ? number(key) : (seen_.insert(key), fallback); }

std::int64_t Fields::integer(const std::string& key) {
  const json& v = at(key);
  if (!v.is_number_integer()) throw SchemaError(path_ + "." + key, "expected an integer, got " + type_name(v));
  return v.get<std::int64_t>();
}

std::int64_t Fields::integer(const std::string& key, std::int64_t fallback) {
  return has(key) ? integer(key) : (seen_.insert(key), fallback);
}

bool Fields::boolean(const std::string& key, bool fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const json& v = object_.at(key);
  if (!v.is_boolean()) throw SchemaError(path_ + "." + key, "expected a boolean, got " + type_name(v));
  return v.get<bool>();
}

std::string Fields::string(const std::string& key) {
  const json& v = at(key);
  if (!v.is_string()) throw SchemaError(path_ + "." + key, "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

std::string Fields::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : (seen_.insert(key), fallback);
}

std::vector<double> Fields::numbers(const std::string& key) { return as_numbers(at(key), path_ + "." + key); }

Fields Fields::object(const std::string& key) { return Fields(at(key), path_ + "." + key); }

void Fields::finish() const {
  for (const auto& item : object_.items()) {
    if (!seen_.contains(item.key())) throw SchemaError(path_ + "." + item.key(), "unknown field");
  }
}

namespace {

void add_children(ScenarioTree::Builder& builder, int parent, const json& children, const std::string& path) {
  if (!children.is_array()) throw SchemaError(path, "expected an array of child nodes");
  for (std::size_t i = 0; i < children.size(); ++i) {
    const std::string cpath = path + "[" + std::to_string(i) + "]";
    Fields f(children[i], cpath);
    const json& p = f.raw("p");
    const std::vector<double> price = f.numbers("S");
    const double benchmark = f.number("B", 0.0);
    int id = -1;
    if (p.is_string()) {
      Rational r;
      try {
        r = Rational::parse(p.get<std::string>());
      } catch (const Error& e) {
        throw SchemaError(cpath + ".p", e.what());
      }
      id = builder.add_child(parent, r, price, benchmark);
    } else if (p.is_number()) {
      id = builder.add_child(parent, p.get<double>(), price, benchmark);
    } else {
      throw SchemaError(cpath + ".p", "expected a number or an \"a/b\" string");
    }
    if (f.has("children")) add_children(builder, id, f.raw("children"), cpath + ".children");
    f.finish();
  }
}

json node_to_json(const ScenarioTree& tree, int id) {
  const Node& n = tree.node(id);
  json out;
  if (id != 0) {
    if (n.exact_prob) {
      out["p"] = std::to_string(n.exact_prob->num) + "/" + std::to_string(n.exact_prob->den);
    } else {
      out["p"] = n.prob;
    }
  }
  out["S"] = n.price;
  if (n.children.empty()) {
    out["B"] = n.benchmark;
  } else {
    json kids = json::array();
    for (int c : n.children) kids.push_back(node_to_json(tree, c));
    out["children"] = std::move(kids);
  }
  return out;
}

}  // namespace

ScenarioTree parse_tree(const json& j, const std::string& path) {
  Fields top(j, path);
  Fields root = top.object("root");
  ScenarioTree::Builder builder(root.numbers("S"));
  if (root.has("children")) add_children(builder, 0, root.raw("children"), root.path() + ".children");
  root.finish();
  top.finish();
  try {
    return builder.build();
  } catch (const ConfigError& e) {
    throw SchemaError(path, e.what());
  }
}

json tree_to_json(const ScenarioTree& tree) { return json{{"root", node_to_json(tree, 0)}}; }

CptSpec parse_spec(const json& j, const std::string& path) {
  Fields f(j, path);
  CptSpec spec;
  if (f.has("preset")) {
    try {
      spec = CptSpec::preset(f.string("preset"));
    } catch (const ConfigError& e) {
      throw SchemaError(path + ".preset", e.what());
    }
  } else if (f.has("power")) {
    Fields p = f.object("power");
    const double alpha = p.number("alpha");
    const double beta = p.number("beta");
    const double gamma = p.number("gamma");
    const double delta = p.number("delta");
    const double k_plus = p.number("k_plus", 1.0);
    const double k_minus = p.number("k_minus", 1.0);
    p.finish();
    for (double v : {alpha, beta, gamma, delta, k_plus, k_minus}) {
      if (!(v > 0.0)) throw SchemaError(path + ".power", "exponents and scales must be positive");
    }
    spec = CptSpec::power_family(alpha, beta, gamma, delta, k_plus, k_minus);
  } else {
    throw SchemaError(path, "expected \"preset\" or \"power\"");
  }
  f.finish();
  return spec;
}

Strategy parse_strategy(const json& j, const ScenarioTree& tree, const std::string& path) {
  Fields f(j, path);
  Strategy theta = Strategy::zero(tree);
  if (f.has("flat")) {
    const std::vector<double> flat = f.numbers("flat");
    const std::size_t expected = tree.decision_nodes().size() * static_cast<std::size_t>(tree.dim());
    if (flat.size() != expected) {
      throw SchemaError(path + ".flat", "expected " + std::to_string(expected) + " entries, got " +
                                            std::to_string(flat.size()));
    }
    theta = Strategy::from_flat(tree, flat);
  } else if (f.has("nodes")) {
    const json& nodes = f.raw("nodes");
    if (!nodes.is_object()) throw SchemaError(path + ".nodes", "expected an object keyed by node id");
    for (const auto& item : nodes.items()) {
      const std::string npath = path + ".nodes." + item.key();
      int id = -1;
      try {
        std::size_t used = 0;
        id = std::stoi(item.key(), &used);
        if (used != item.key().size()) id = -1;
      } catch (const std::exception&) {
        id = -1;
      }
      if (id < 0 || static_cast<std::size_t>(id) >= tree.size() || tree.is_terminal(id)) {
        throw SchemaError(npath, "not a non-terminal node id");
      }
      const std::vector<double> v = as_numbers(item.value(), npath);
      if (static_cast<int>(v.size()) != tree.dim()) {
        throw SchemaError(npath, "expected " + std::to_string(tree.dim()) + " holdings");
      }
      std::copy(v.begin(), v.end(), theta.at(id).begin());
    }
  } else {
    throw SchemaError(path, "expected \"flat\" or \"nodes\"");
  }
  f.finish();
  return theta;
}

json strategy_to_json(const ScenarioTree& tree, const Strategy& theta) {
  json nodes = json::object();
  for (int id : tree.decision_nodes()) {
    const auto span = theta.at(id);
    nodes[std::to_string(id)] = std::vector<double>(span.begin(), span.end());
  }
  return json{{"nodes", nodes}};
}

OptimizeConfig parse_optimize_config(const json& j, const std::string& path) {
  Fields f(j, path);
  OptimizeConfig c;
  c.starts = static_cast<int>(f.integer("starts", c.starts));
  c.initial_step = f.number("initial_step", c.initial_step);
  c.contraction = f.number("contraction", c.contraction);
  c.min_step = f.number("min_step", c.min_step);
  c.budget = static_cast<long>(f.integer("budget", c.budget));
  c.require_gate = f.boolean("require_gate", c.require_gate);
  c.direction_grid = static_cast<int>(f.integer("direction_grid", c.direction_grid));
  f.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw SchemaError(path, e.what());
  }
  return c;
}

StressFamily parse_family(const json& j, const std::string& path) {
  Fields f(j, path);
  StressFamily fam;
  fam.count = static_cast<int>(f.integer("count", fam.count));
  fam.min_atoms = static_cast<int>(f.integer("min_atoms", fam.min_atoms));
  fam.max_atoms = static_cast<int>(f.integer("max_atoms", fam.max_atoms));
  fam.value_min = f.number("value_min", fam.value_min);
  fam.value_max = f.number("value_max", fam.value_max);
  try {
    fam.shape = parse_family_shape(f.string("shape", "random"));
  } catch (const ConfigError& e) {
    throw SchemaError(path + ".shape", e.what());
  }
  f.finish();
  if (fam.count < 1) throw SchemaError(path + ".count", "must be >= 1");
  if (fam.min_atoms < 1 || fam.max_atoms < fam.min_atoms) throw SchemaError(path, "atom range is empty");
  if (!(fam.value_max >= fam.value_min)) throw SchemaError(path, "value range is empty");
  return fam;
}

JointDensity parse_density(const json& j, const std::string& path) {
  Fields f(j, path);
  JointDensity d;
  try {
    if (f.has("grid_file")) {
      d = JointDensity::from_grid_file(f.string("grid_file"));
    } else {
      const std::string preset = f.string("preset");
      const double half_width = f.number("half_width", 8.0);
      if (preset == "product_normal") {
        d = JointDensity::product_normal(static_cast<int>(f.integer("dim")), half_width);
      } else if (preset == "correlated_normal") {
        d = JointDensity::correlated_normal(f.numbers("mean"), f.numbers("cov"), half_width);
      } else {
        throw SchemaError(path + ".preset", "unknown density preset \"" + preset + "\"");
      }
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const ConfigError& e) {
    throw SchemaError(path, e.what());
  }
  const std::int64_t nodes = f.integer("nodes", d.nodes);
  if (nodes < 3 || nodes % 2 == 0) throw SchemaError(path + ".nodes", "must be an odd integer >= 3");
  d.nodes = static_cast<int>(nodes);
  f.finish();
  return d;
}

}  // namespace cptlab::cli
