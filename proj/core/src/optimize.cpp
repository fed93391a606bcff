#include "cptlab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cptlab/errors.hpp"
#include "cptlab/gate.hpp"
#include "cptlab/parallel.hpp"
#include "cptlab/rng.hpp"

namespace cptlab {

void OptimizeConfig::validate() const {
  if (starts < 1) throw ConfigError("optimize.starts must be >= 1");
  if (!(contraction > 0.0 && contraction < 1.0)) throw ConfigError("optimize.contraction must lie in (0, 1)");
  if (!(initial_step > 0.0)) throw ConfigError("optimize.initial_step must be positive");
  if (!(min_step > 0.0) || min_step > initial_step) throw ConfigError("optimize.min_step must lie in (0, initial_step]");
  if (budget < starts) throw ConfigError("optimize.budget must be >= starts");
  if (threads < 1) throw ConfigError("optimize.threads must be >= 1");
  if (direction_grid < 4) throw ConfigError("optimize.direction_grid must be >= 4");
}

Evaluation evaluate_strategy(const ScenarioTree& tree, const CptSpec& spec, double z, const Strategy& theta) {
  const CptParts parts = cpt_parts(terminal_distribution(tree, z, theta), spec);
  return {parts.v, parts.v_plus, parts.v_minus};
}

bool is_admissible(const ScenarioTree&, const CptSpec&, double, const Strategy&) { return true; }

namespace {

struct StartOutcome {
  std::vector<double> x;
  Evaluation best;
  long evaluations = 0;
  bool converged = false;
  std::vector<IterateRecord> records;
};

class Search {
 public:
  Search(const ScenarioTree& tree, const CptSpec& spec, double z, const OptimizeConfig& config,
         const MartingaleDensity* density, const NaCertificate& certificate)
      : tree_(tree), spec_(spec), z_(z), config_(config), density_(density), certificate_(certificate) {
    const int d = tree.dim();
    for (int node : tree.decision_nodes()) {
      for (int i = 0; i < d; ++i) {
        bool moves = false;
        for (int c : tree.node(node).children) {
          if (tree.increment(c)[static_cast<std::size_t>(i)] != 0.0) moves = true;
        }
        active_.push_back(moves);
      }
    }
  }

  std::size_t size() const { return active_.size(); }

  std::vector<double> start_point(int k) const {
    std::vector<double> x(size(), 0.0);
    if (k == 0) return x;
    if (k == 1 && density_ != nullptr) {
      x = density_->phi_star.flatten(tree_);
    } else {
      CounterRng rng(config_.seed, static_cast<std::uint64_t>(k));
      const int d = tree_.dim();
      std::size_t idx = 0;
      for (int node : tree_.decision_nodes()) {
        const double kappa = certificate_.passed ? certificate_.at(tree_, node).kappa : 1.0;
        const double scale = kappa > 0.0 ? 1.0 / kappa : 1.0;
        for (int i = 0; i < d; ++i, ++idx) {
          const double u1 = 1.0 - rng.uniform();
          const double u2 = rng.uniform();
          x[idx] = scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
        }
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!active_[i]) x[i] = 0.0;
    }
    return x;
  }

  StartOutcome run(int k, long budget) const {
    StartOutcome out;
    out.x = start_point(k);
    out.best = eval(out.x);
    out.evaluations = 1;
    double step = config_.initial_step;
    int iteration = 0;
    out.records.push_back(record(k, iteration, out, step));
    std::vector<double> trial = out.x;
    while (step >= config_.min_step && out.evaluations < budget) {
      std::size_t best_index = size();
      double best_sign = 0.0;
      Evaluation best = out.best;
      for (std::size_t i = 0; i < size() && out.evaluations < budget; ++i) {
        if (!active_[i]) continue;
        for (double sign : {1.0, -1.0}) {
          if (out.evaluations >= budget) break;
          trial[i] = out.x[i] + sign * step;
          const Evaluation e = eval(trial);
          ++out.evaluations;
          if (e.v > best.v) {
            best = e;
            best_index = i;
            best_sign = sign;
          }
        }
        trial[i] = out.x[i];
      }
      if (best_index < size()) {
        out.x[best_index] += best_sign * step;
        trial[best_index] = out.x[best_index];
        out.best = best;
        out.records.push_back(record(k, ++iteration, out, step));
      } else {
        step *= config_.contraction;
      }
    }
    out.converged = step < config_.min_step;
    return out;
  }

 private:
  Evaluation eval(const std::vector<double>& x) const {
    return evaluate_strategy(tree_, spec_, z_, Strategy::from_flat(tree_, x));
  }

  IterateRecord record(int k, int iteration, const StartOutcome& out, double step) const {
    IterateRecord r;
    r.start = k;
    r.iteration = iteration;
    r.evaluations = out.evaluations;
    r.step = step;
    r.v = out.best.v;
    r.v_plus = out.best.v_plus;
    r.v_minus = out.best.v_minus;
    if (density_ != nullptr) {
      const Strategy theta = Strategy::from_flat(tree_, out.x);
      r.holding = holding_moment_bounds(tree_, *density_, certificate_, theta);
      for (const HoldingBound& h : r.holding) {
        r.eq_theta_half.push_back(h.lhs);
        r.holding_ok = r.holding_ok && h.holds;
      }
      r.increment_bound_ok = moment_diagnostics(tree_, *density_, z_, theta, 2.0).increment_bound_ok;
    }
    return r;
  }

  const ScenarioTree& tree_;
  const CptSpec& spec_;
  double z_;
  const OptimizeConfig& config_;
  const MartingaleDensity* density_;
  const NaCertificate& certificate_;
  std::vector<bool> active_;
};

}  // namespace

OptimizeResult maximize_cpt(const ScenarioTree& tree, const CptSpec& spec, double z, const OptimizeConfig& config,
                            const MartingaleDensity* density) {
  config.validate();
  if (config.require_gate) {
    const ParameterVerdict verdict = classify(spec.alpha, spec.beta, spec.gamma, spec.delta);
    if (verdict.tag != Verdict::WellPosedA && verdict.tag != Verdict::WellPosedB) {
      throw GateRefusal("optimize refused: parameters classified " + std::string(to_string(verdict.tag)) + " (" +
                        verdict.witness + ")");
    }
  }
  if (density != nullptr && density->rho.size() != tree.leaves().size()) {
    throw ConfigError("optimize: density does not match the tree");
  }
  const NaCertificate certificate = check_robust_na(tree, config.direction_grid);
  const Search search(tree, spec, z, config, density, certificate);

  const long per_start = config.budget / config.starts;
  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(config.starts));
  parallel_for(outcomes.size(), config.threads,
               [&](std::size_t k) { outcomes[k] = search.run(static_cast<int>(k), per_start); });

  OptimizeResult result;
  std::size_t winner = 0;
  result.converged = true;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].best.v > outcomes[winner].best.v) winner = k;
    result.evaluations += outcomes[k].evaluations;
    result.converged = result.converged && outcomes[k].converged;
  }
  const StartOutcome& best = outcomes[winner];
  result.theta_star = Strategy::from_flat(tree, best.x);
  result.v_star = best.best.v;
  result.v_plus = best.best.v_plus;
  result.v_minus = best.best.v_minus;
  result.winner_start = static_cast<int>(winner);

  double running = -std::numeric_limits<double>::infinity();
  result.max_eq_theta_half.assign(static_cast<std::size_t>(tree.horizon()), 0.0);
  for (StartOutcome& o : outcomes) {
    for (IterateRecord& r : o.records) {
      running = std::max(running, r.v);
      r.best_so_far = running;
      result.sup_v_minus = std::max(result.sup_v_minus, r.v_minus);
      for (std::size_t t = 0; t < r.eq_theta_half.size(); ++t) {
        result.max_eq_theta_half[t] = std::max(result.max_eq_theta_half[t], r.eq_theta_half[t]);
      }
      result.holding_bounds_ok = result.holding_bounds_ok && r.holding_ok;
      result.increment_bounds_ok = result.increment_bounds_ok && r.increment_bound_ok;
      result.trace.push_back(std::move(r));
    }
  }
  if (density == nullptr) result.max_eq_theta_half.clear();
  return result;
}

}  // namespace cptlab
