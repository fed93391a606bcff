#include "cptlab/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cptlab/errors.hpp"
#include "cptlab/rng.hpp"

namespace cptlab {

namespace {

Rational reduced(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ConfigError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const long long n = std::stoll(text, &used);
      if (used != text.size()) throw ConfigError("bad rational: " + text);
      return {n, 1};
    }
    const std::string a = text.substr(0, slash);
    const std::string b = text.substr(slash + 1);
    const long long n = std::stoll(a, &used);
    if (used != a.size()) throw ConfigError("bad rational: " + text);
    const long long d = std::stoll(b, &used);
    if (used != b.size()) throw ConfigError("bad rational: " + text);
    return reduced(n, d);
  } catch (const std::logic_error&) {
    throw ConfigError("bad rational: " + text);
  }
}

Rational Rational::operator+(const Rational& other) const {
  const std::int64_t g = std::gcd(den, other.den);
  const std::int64_t scale = other.den / g;
  return reduced(num * scale + other.num * (den / g), den * scale);
}

ScenarioTree::Builder::Builder(std::vector<double> root_price) {
  Node root;
  root.price = std::move(root_price);
  nodes_.push_back(std::move(root));
}

int ScenarioTree::Builder::add_child(int parent, double prob, std::vector<double> price,
                                     double benchmark) {
  if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size()) {
    throw ConfigError("add_child: unknown parent " + std::to_string(parent));
  }
  Node child;
  child.parent = parent;
  child.depth = nodes_[static_cast<std::size_t>(parent)].depth + 1;
  child.prob = prob;
  child.price = std::move(price);
  child.benchmark = benchmark;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(child));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

int ScenarioTree::Builder::add_child(int parent, Rational prob, std::vector<double> price,
                                     double benchmark) {
  const int id = add_child(parent, prob.to_double(), std::move(price), benchmark);
  nodes_[static_cast<std::size_t>(id)].exact_prob = prob;
  return id;
}

ScenarioTree ScenarioTree::Builder::build() const {
  ScenarioTree tree;
  tree.nodes_ = nodes_;
  tree.dim_ = static_cast<int>(nodes_.front().price.size());
  if (tree.dim_ < 1) throw ConfigError("price vectors must have at least one asset");
  if (nodes_.front().children.empty()) throw ConfigError("tree has no branches (horizon 0)");

  const std::size_t n = nodes_.size();
  tree.path_prob_.assign(n, 1.0);
  tree.leaf_index_.assign(n, -1);
  tree.decision_index_.assign(n, -1);

  int horizon = -1;
  for (std::size_t id = 0; id < n; ++id) {
    const Node& node = nodes_[id];
    if (static_cast<int>(node.price.size()) != tree.dim_) {
      throw ConfigError("node " + std::to_string(id) + ": price dimension " +
                        std::to_string(node.price.size()) + " != " + std::to_string(tree.dim_));
    }
    for (double s : node.price) {
      if (!std::isfinite(s)) throw ConfigError("node " + std::to_string(id) + ": non-finite price");
    }
    if (node.parent >= 0) {
      tree.path_prob_[id] = tree.path_prob_[static_cast<std::size_t>(node.parent)] * node.prob;
    }
    if (node.children.empty()) {
      if (horizon < 0) horizon = node.depth;
      if (node.depth != horizon) {
        throw ConfigError("leaf " + std::to_string(id) + " at depth " + std::to_string(node.depth) +
                          ", expected every leaf at depth " + std::to_string(horizon));
      }
      tree.leaf_index_[id] = static_cast<int>(tree.leaves_.size());
      tree.leaves_.push_back(static_cast<int>(id));
      continue;
    }
    tree.decision_index_[id] = static_cast<int>(tree.decision_nodes_.size());
    tree.decision_nodes_.push_back(static_cast<int>(id));

    double total = 0.0;
    bool all_exact = true;
    Rational exact_total{0, 1};
    for (int c : node.children) {
      const Node& child = nodes_[static_cast<std::size_t>(c)];
      if (!(child.prob > 0.0 && child.prob <= 1.0)) {
        std::ostringstream msg;
        msg << "node " << c << ": branch probability " << child.prob << " outside (0, 1]";
        throw ConfigError(msg.str());
      }
      total += child.prob;
      if (child.exact_prob) {
        exact_total = exact_total + *child.exact_prob;
      } else {
        all_exact = false;
      }
    }
    if (all_exact) {
      if (!(exact_total == Rational{1, 1})) {
        throw ConfigError("node " + std::to_string(id) + ": branch probabilities sum to " +
                          std::to_string(exact_total.num) + "/" + std::to_string(exact_total.den));
      }
    } else if (std::abs(total - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "node " << id << ": branch probabilities sum to " << total;
      throw ConfigError(msg.str());
    }
  }
  tree.horizon_ = horizon;
  tree.by_depth_.resize(static_cast<std::size_t>(horizon) + 1);
  for (std::size_t id = 0; id < n; ++id) {
    tree.by_depth_[static_cast<std::size_t>(nodes_[id].depth)].push_back(static_cast<int>(id));
  }
  return tree;
}

std::vector<double> ScenarioTree::increment(int child) const {
  const Node& c = node(child);
  if (c.parent < 0) throw ConfigError("root has no increment");
  const Node& p = node(c.parent);
  std::vector<double> ds(static_cast<std::size_t>(dim_));
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = c.price[i] - p.price[i];
  return ds;
}

std::vector<int> ScenarioTree::path(int id) const {
  std::vector<int> out;
  for (int cur = id; cur >= 0; cur = node(cur).parent) out.push_back(cur);
  std::reverse(out.begin(), out.end());
  return out;
}

ScenarioTree one_step_tree(std::vector<double> root_price,
                           const std::vector<std::pair<double, std::vector<double>>>& branches,
                           double benchmark) {
  ScenarioTree::Builder builder(root_price);
  for (const auto& [p, ds] : branches) {
    if (ds.size() != root_price.size()) throw ConfigError("increment dimension mismatch");
    std::vector<double> price(root_price.size());
    for (std::size_t i = 0; i < price.size(); ++i) price[i] = root_price[i] + ds[i];
    builder.add_child(0, p, std::move(price), benchmark);
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Strategy

Strategy Strategy::zero(const ScenarioTree& tree) {
  Strategy s;
  s.dim_ = tree.dim();
  s.node_count_ = tree.size();
  s.values_.assign(tree.size() * static_cast<std::size_t>(tree.dim()), 0.0);
  return s;
}

Strategy Strategy::from_flat(const ScenarioTree& tree, std::span<const double> flat) {
  const std::size_t d = static_cast<std::size_t>(tree.dim());
  if (flat.size() != tree.decision_nodes().size() * d) {
    throw ConfigError("flat strategy has " + std::to_string(flat.size()) + " entries, expected " +
                      std::to_string(tree.decision_nodes().size() * d));
  }
  Strategy s = zero(tree);
  std::size_t k = 0;
  for (int node : tree.decision_nodes()) {
    auto dst = s.at(node);
    for (std::size_t i = 0; i < d; ++i) dst[i] = flat[k++];
  }
  return s;
}

std::span<double> Strategy::at(int node) {
  const std::size_t d = static_cast<std::size_t>(dim_);
  return std::span<double>(values_).subspan(static_cast<std::size_t>(node) * d, d);
}

std::span<const double> Strategy::at(int node) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(node) * d, d);
}

std::vector<double> Strategy::flatten(const ScenarioTree& tree) const {
  std::vector<double> flat;
  flat.reserve(tree.decision_nodes().size() * static_cast<std::size_t>(dim_));
  for (int node : tree.decision_nodes()) {
    for (double v : at(node)) flat.push_back(v);
  }
  return flat;
}

Strategy Strategy::scaled(double factor) const {
  Strategy out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

Strategy Strategy::operator+(const Strategy& other) const {
  if (dim_ != other.dim_ || node_count_ != other.node_count_) {
    throw ConfigError("adding strategies of different shapes");
  }
  Strategy out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] += other.values_[i];
  return out;
}

bool Strategy::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

// ---------------------------------------------------------------------------
// Wealth

WealthProcess wealth(const ScenarioTree& tree, double z, const Strategy& theta) {
  if (theta.dim() != tree.dim() || theta.node_count() != tree.size()) {
    throw ConfigError("strategy shape (d=" + std::to_string(theta.dim()) + ", nodes=" +
                      std::to_string(theta.node_count()) + ") does not match tree (d=" +
                      std::to_string(tree.dim()) + ", nodes=" + std::to_string(tree.size()) + ")");
  }
  WealthProcess out;
  out.initial_capital = z;
  out.values.assign(tree.size(), 0.0);
  out.values[0] = z;
  // Parents always precede children in id order.
  for (std::size_t id = 1; id < tree.size(); ++id) {
    const Node& node = tree.node(static_cast<int>(id));
    const Node& parent = tree.node(node.parent);
    const auto holding = theta.at(node.parent);
    double gain = 0.0;
    for (std::size_t i = 0; i < holding.size(); ++i) gain += holding[i] * (node.price[i] - parent.price[i]);
    out.values[id] = out.values[static_cast<std::size_t>(node.parent)] + gain;
  }
  return out;
}

DiscreteDistribution terminal_distribution(const ScenarioTree& tree, double z, const Strategy& theta) {
  const WealthProcess x = wealth(tree, z, theta);
  std::vector<Atom> atoms;
  atoms.reserve(tree.leaves().size());
  for (int leaf : tree.leaves()) {
    atoms.push_back({x.values[static_cast<std::size_t>(leaf)] - tree.node(leaf).benchmark,
                     tree.path_probability(leaf)});
  }
  return DiscreteDistribution(std::move(atoms));
}

// ---------------------------------------------------------------------------
// Robust no-arbitrage

std::vector<std::vector<double>> probe_directions(int d, int direction_grid) {
  if (d < 1) throw ConfigError("dimension must be positive");
  std::vector<std::vector<double>> dirs;
  if (d == 1) return {{1.0}, {-1.0}};
  if (direction_grid < 2) throw ConfigError("direction_grid must be at least 2");
  if (d == 2) {
    for (int k = 0; k < direction_grid; ++k) {
      const double a = 2.0 * std::numbers::pi * k / direction_grid;
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  for (int i = 0; i < d; ++i) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> e(static_cast<std::size_t>(d), 0.0);
      e[static_cast<std::size_t>(i)] = sign;
      dirs.push_back(std::move(e));
    }
  }
  if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < direction_grid; ++k) {
      const double y = 1.0 - 2.0 * (k + 0.5) / direction_grid;
      const double r = std::sqrt(1.0 - y * y);
      dirs.push_back({r * std::cos(golden * k), y, r * std::sin(golden * k)});
    }
    return dirs;
  }
  CounterRng rng(0x5eedd1ec7ULL, static_cast<std::uint64_t>(d));
  for (int k = 0; k < direction_grid; ++k) {
    std::vector<double> v(static_cast<std::size_t>(d));
    double norm = 0.0;
    for (double& x : v) {
      // Box-Muller keeps the spread isotropic.
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

const NodeCertificate& NaCertificate::at(const ScenarioTree& tree, int node) const {
  const int idx = tree.decision_index(node);
  if (idx < 0 || static_cast<std::size_t>(idx) >= nodes.size()) {
    throw ConfigError("no certificate entry for node " + std::to_string(node));
  }
  return nodes[static_cast<std::size_t>(idx)];
}

NaCertificate check_robust_na(const ScenarioTree& tree, int direction_grid, double beta_min) {
  if (!(beta_min > 0.0 && beta_min <= 1.0)) throw DomainError("beta_min must lie in (0, 1]");
  const auto directions = probe_directions(tree.dim(), direction_grid);

  NaCertificate cert;
  cert.exact = tree.dim() == 1;
  cert.passed = true;

  struct Loss {
    double loss;
    double prob;
  };
  std::vector<Loss> losses;

  for (int node : tree.decision_nodes()) {
    const auto& children = tree.node(node).children;
    std::vector<std::vector<double>> increments;
    increments.reserve(children.size());
    for (int c : children) increments.push_back(tree.increment(c));

    // For a direction xi the achievable kappa is the largest loss level L with
    // P(-xi . dS >= L | node) >= beta_min; the node's kappa is the worst case.
    double kappa = 1.0;
    std::size_t binding = 0;
    bool failed = false;
    for (std::size_t k = 0; k < directions.size(); ++k) {
      losses.clear();
      for (std::size_t j = 0; j < children.size(); ++j) {
        losses.push_back({-dot(directions[k], increments[j]), tree.node(children[j]).prob});
      }
      std::sort(losses.begin(), losses.end(), [](const Loss& a, const Loss& b) { return a.loss > b.loss; });
      double mass = 0.0;
      double level = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < losses.size(); ++j) {
        mass += losses[j].prob;
        // Ties share the level; only stop once the whole tie group is counted.
        if (j + 1 < losses.size() && losses[j + 1].loss == losses[j].loss) continue;
        if (mass >= beta_min) {
          level = losses[j].loss;
          break;
        }
      }
      if (!(level > 0.0)) {
        failed = true;
        binding = k;
        break;
      }
      if (level < kappa) {
        kappa = level;
        binding = k;
      }
    }

    NodeCertificate entry;
    entry.node = node;
    if (failed) {
      entry.worst_direction = directions[binding];
      cert.nodes.push_back(entry);
      if (cert.passed) {
        cert.passed = false;
        std::ostringstream reason;
        reason << "node " << node << ": no position loss of positive size has conditional probability >= "
               << beta_min << " in the probed direction";
        cert.failure = NaFailure{node, directions[binding], reason.str()};
      }
      continue;
    }

    double beta = 1.0;
    std::size_t worst = 0;
    for (std::size_t k = 0; k < directions.size(); ++k) {
      double mass = 0.0;
      for (std::size_t j = 0; j < children.size(); ++j) {
        if (-dot(directions[k], increments[j]) >= kappa) mass += tree.node(children[j]).prob;
      }
      if (mass < beta) {
        beta = mass;
        worst = k;
      }
    }
    entry.kappa = kappa;
    entry.beta = beta;
    entry.worst_direction = directions[worst];
    cert.nodes.push_back(std::move(entry));
  }
  return cert;
}

}  // namespace cptlab
