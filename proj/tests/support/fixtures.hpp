#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cptlab/cpt.hpp"
#include "cptlab/market.hpp"
#include "cptlab/rng.hpp"

namespace cptlab::testing {

// One step, +2 w.p. 0.6 and -1 w.p. 0.4.
inline ScenarioTree updown_tree(double benchmark = 0.0) {
  return one_step_tree({0.0}, {{0.6, {2.0}}, {0.4, {-1.0}}}, benchmark);
}

inline ScenarioTree symmetric_binomial() { return one_step_tree({0.0}, {{0.5, {1.0}}, {0.5, {-1.0}}}); }

// Two periods of +-1 moves with probability 1/2: the reference binomial.
inline ScenarioTree reference_binomial(int periods = 2) {
  ScenarioTree::Builder b({0.0});
  std::vector<std::pair<int, double>> frontier{{0, 0.0}};
  for (int t = 0; t < periods; ++t) {
    std::vector<std::pair<int, double>> next;
    for (auto [id, s] : frontier) {
      next.emplace_back(b.add_child(id, Rational{1, 2}, {s + 1.0}), s + 1.0);
      next.emplace_back(b.add_child(id, Rational{1, 2}, {s - 1.0}), s - 1.0);
    }
    frontier = std::move(next);
  }
  return b.build();
}

// Seeded arbitrage-free tree: every node's increments surround the origin
// (opposite signs for d = 1, three or more directions with gaps below pi for
// d = 2), branch masses at least 0.1 before normalization.
inline ScenarioTree random_na_tree(std::uint64_t seed, int horizon, int dim, int max_branches = 3) {
  CounterRng rng(seed, 11);
  ScenarioTree::Builder b(std::vector<double>(static_cast<std::size_t>(dim), 100.0));
  std::vector<std::pair<int, std::vector<double>>> frontier{{0, std::vector<double>(static_cast<std::size_t>(dim), 100.0)}};
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::pair<int, std::vector<double>>> next;
    for (auto& [id, price] : frontier) {
      const int min_branches = dim == 1 ? 2 : 3;
      const int k = min_branches + static_cast<int>(rng() % static_cast<std::uint64_t>(max_branches - min_branches + 1));
      std::vector<std::vector<double>> moves;
      if (dim == 1) {
        moves.push_back({0.5 + 1.5 * rng.uniform()});
        moves.push_back({-(0.5 + 1.5 * rng.uniform())});
        for (int j = 2; j < k; ++j) moves.push_back({-2.0 + 4.0 * rng.uniform()});
      } else {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        for (int j = 0; j < k; ++j) {
          const double jitter = (rng.uniform() - 0.5) * (std::numbers::pi / 3.0) * 0.9 * (3.0 / k);
          const double angle = phase + 2.0 * std::numbers::pi * j / k + jitter;
          const double r = 0.5 + 1.5 * rng.uniform();
          moves.push_back({r * std::cos(angle), r * std::sin(angle)});
        }
      }
      std::vector<double> w(moves.size());
      double total = 0.0;
      for (double& x : w) total += (x = 0.1 + rng.uniform());
      std::vector<double> probs(moves.size());
      double assigned = 0.0;
      for (std::size_t j = 0; j + 1 < moves.size(); ++j) assigned += (probs[j] = w[j] / total);
      probs.back() = 1.0 - assigned;
      for (std::size_t j = 0; j < moves.size(); ++j) {
        std::vector<double> child = price;
        for (int i = 0; i < dim; ++i) child[static_cast<std::size_t>(i)] += moves[j][static_cast<std::size_t>(i)];
        next.emplace_back(b.add_child(id, probs[j], child, 0.0), child);
      }
    }
    frontier = std::move(next);
  }
  return b.build();
}

inline Strategy random_strategy(const ScenarioTree& tree, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, 23);
  Strategy s = Strategy::zero(tree);
  for (int node : tree.decision_nodes()) {
    for (double& v : s.at(node)) v = scale * (2.0 * rng.uniform() - 1.0);
  }
  return s;
}

// Seeded law with up to max_atoms atoms on [lo, hi].
inline DiscreteDistribution random_law(std::uint64_t seed, int max_atoms, double lo, double hi) {
  CounterRng rng(seed, 5);
  const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_atoms));
  std::vector<Atom> atoms;
  double total = 0.0;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (double& x : w) total += (x = 0.05 + rng.uniform());
  for (int i = 0; i < n; ++i) atoms.push_back({lo + (hi - lo) * rng.uniform(), w[static_cast<std::size_t>(i)] / total});
  return DiscreteDistribution(std::move(atoms));
}

}  // namespace cptlab::testing
