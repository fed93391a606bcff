#include "cptlab/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cptlab/errors.hpp"

namespace cptlab {

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ConfigError("distribution has no atoms");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.probability > 0.0 && a.probability <= 1.0 + kProbabilityTolerance)) {
      std::ostringstream msg;
      msg << "atom probability " << a.probability << " outside (0, 1]";
      throw ConfigError(msg.str());
    }
    if (!std::isfinite(a.value)) throw ConfigError("atom value is not finite");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "atom probabilities sum to " << total;
    throw ConfigError(msg.str());
  }
}

DiscreteDistribution DiscreteDistribution::point_mass(double value) {
  return DiscreteDistribution({{value, 1.0}});
}

DiscreteDistribution DiscreteDistribution::normalized() const {
  std::vector<Atom> sorted = atoms_;
  std::sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) {
    return a.value < b.value || (a.value == b.value && a.probability < b.probability);
  });
  std::vector<Atom> merged;
  for (const Atom& a : sorted) {
    if (!merged.empty() && merged.back().value == a.value) {
      merged.back().probability += a.probability;
    } else {
      merged.push_back(a);
    }
  }
  DiscreteDistribution out;
  out.atoms_ = std::move(merged);
  return out;
}

double DiscreteDistribution::expectation() const {
  return expectation([](double x) { return x; });
}

DiscreteDistribution DiscreteDistribution::scaled(double factor) const {
  DiscreteDistribution out = *this;
  for (Atom& a : out.atoms_) a.value *= factor;
  return out;
}

DiscreteDistribution DiscreteDistribution::shifted(double offset) const {
  DiscreteDistribution out = *this;
  for (Atom& a : out.atoms_) a.value += offset;
  return out;
}

}  // namespace cptlab
