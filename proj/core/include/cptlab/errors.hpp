#pragma once

#include <stdexcept>
#include <string>

namespace cptlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: dimension mismatches, invalid trees, bad schemas.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A CptSpec that violates its contract (u(0) != 0, non-monotone w, ...).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Parameter outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The market admits an arbitrage (or fails the robust no-arbitrage test).
class ArbitrageError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm, int iterations)
      : Error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}

  double gradient_norm() const noexcept { return gradient_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

class GateRefusal : public Error {
 public:
  using Error::Error;
};

}  // namespace cptlab
