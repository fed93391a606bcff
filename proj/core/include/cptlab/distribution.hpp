#pragma once

#include <span>
#include <vector>

namespace cptlab {

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

inline constexpr double kProbabilityTolerance = 1e-12;

// Finite law: a list of atoms with strictly positive masses summing to one.
// Duplicate values are allowed; normalized() merges them.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;

  // Throws ConfigError when a mass is outside (0, 1] or the total differs
  // from one by more than kProbabilityTolerance.
  explicit DiscreteDistribution(std::vector<Atom> atoms);

  static DiscreteDistribution point_mass(double value);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  // Atoms sorted by value (ascending) with ties merged.
  DiscreteDistribution normalized() const;

  double expectation() const;

  template <class Fn>
  double expectation(Fn&& fn) const {
    double total = 0.0;
    for (const Atom& a : atoms_) total += a.probability * fn(a.value);
    return total;
  }

  DiscreteDistribution scaled(double factor) const;
  DiscreteDistribution shifted(double offset) const;

 private:
  std::vector<Atom> atoms_;
};

}  // namespace cptlab
