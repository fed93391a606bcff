#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cptlab/distribution.hpp"

namespace cptlab {

// p/q with q > 0, kept in lowest terms. Used to validate branch
// probabilities exactly when the input supplies them as fractions.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational parse(const std::string& text);  // "3/7", "1", "-2/4"
  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  Rational operator+(const Rational& other) const;
  bool operator==(const Rational& other) const = default;
};

struct Node {
  int parent = -1;
  int depth = 0;
  double prob = 1.0;  // conditional probability of reaching this node from its parent
  std::optional<Rational> exact_prob;
  std::vector<double> price;  // S at this node
  double benchmark = 0.0;     // B, meaningful on terminal nodes only
  std::vector<int> children;
};

// Finite filtered market. Node 0 is the root (time 0); the nodes at depth t
// are the atoms of F_t and the leaves are the atoms of Omega. Immutable once
// built, so concurrent readers are safe.
class ScenarioTree {
 public:
  class Builder;

  int horizon() const noexcept { return horizon_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  bool is_terminal(int id) const { return node(id).children.empty(); }

  std::span<const int> leaves() const noexcept { return leaves_; }
  // Non-terminal nodes in id order: one information set per entry.
  std::span<const int> decision_nodes() const noexcept { return decision_nodes_; }
  std::span<const int> nodes_at_depth(int t) const { return by_depth_.at(static_cast<std::size_t>(t)); }

  // Unconditional P-mass of the node (product of branch probabilities).
  double path_probability(int id) const { return path_prob_.at(static_cast<std::size_t>(id)); }
  // Position of a leaf in leaves(), or -1.
  int leaf_index(int id) const { return leaf_index_.at(static_cast<std::size_t>(id)); }
  // Position of a non-terminal node in decision_nodes(), or -1.
  int decision_index(int id) const { return decision_index_.at(static_cast<std::size_t>(id)); }

  // Delta S on the edge parent(child) -> child.
  std::vector<double> increment(int child) const;
  // Node ids from the root to `id`, inclusive.
  std::vector<int> path(int id) const;

 private:
  ScenarioTree() = default;

  int horizon_ = 0;
  int dim_ = 0;
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  std::vector<int> decision_nodes_;
  std::vector<std::vector<int>> by_depth_;
  std::vector<double> path_prob_;
  std::vector<int> leaf_index_;
  std::vector<int> decision_index_;
};

class ScenarioTree::Builder {
 public:
  explicit Builder(std::vector<double> root_price);

  // Returns the new node id.
  int add_child(int parent, double prob, std::vector<double> price, double benchmark = 0.0);
  int add_child(int parent, Rational prob, std::vector<double> price, double benchmark = 0.0);

  // Validates and freezes the tree; throws ConfigError on violations.
  ScenarioTree build() const;

 private:
  std::vector<Node> nodes_;
};

// One-step market from the root price and (probability, increment) branches.
ScenarioTree one_step_tree(std::vector<double> root_price,
                           const std::vector<std::pair<double, std::vector<double>>>& branches,
                           double benchmark = 0.0);

// Predictable holdings: one vector in R^d per non-terminal node.
class Strategy {
 public:
  Strategy() = default;
  static Strategy zero(const ScenarioTree& tree);
  static Strategy from_flat(const ScenarioTree& tree, std::span<const double> flat);

  int dim() const noexcept { return dim_; }
  std::size_t node_count() const noexcept { return node_count_; }

  std::span<double> at(int node);
  std::span<const double> at(int node) const;

  // Stacked holdings over tree.decision_nodes(), d entries per node.
  std::vector<double> flatten(const ScenarioTree& tree) const;

  Strategy scaled(double factor) const;
  Strategy operator+(const Strategy& other) const;
  bool is_zero() const;
  bool operator==(const Strategy& other) const = default;

 private:
  int dim_ = 0;
  std::size_t node_count_ = 0;
  std::vector<double> values_;
};

struct WealthProcess {
  double initial_capital = 0.0;
  std::vector<double> values;  // per node id
};

WealthProcess wealth(const ScenarioTree& tree, double z, const Strategy& theta);

// Law of X_T^z(theta) - B over the leaves, in leaves() order.
DiscreteDistribution terminal_distribution(const ScenarioTree& tree, double z, const Strategy& theta);

struct NodeCertificate {
  int node = -1;
  double kappa = 0.0;
  double beta = 0.0;
  std::vector<double> worst_direction;
};

struct NaFailure {
  int node = -1;
  std::vector<double> direction;
  std::string reason;
};

struct NaCertificate {
  std::vector<NodeCertificate> nodes;  // decision-node order
  bool passed = false;
  // True for d = 1 (both directions probed); false means grid-sufficient only.
  bool exact = false;
  std::optional<NaFailure> failure;

  const NodeCertificate& at(const ScenarioTree& tree, int node) const;
};

// Unit directions probed by the no-arbitrage check: +-1 for d = 1,
// an equiangular circle for d = 2, a Fibonacci sphere for d = 3 and a
// seeded spread (plus the coordinate axes) for d >= 4.
std::vector<std::vector<double>> probe_directions(int d, int direction_grid);

NaCertificate check_robust_na(const ScenarioTree& tree, int direction_grid = 64, double beta_min = 1e-6);

}  // namespace cptlab
