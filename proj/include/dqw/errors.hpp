#pragma once

#include <stdexcept>
#include <string>

namespace dqw {

// Base for everything the library throws. Callers that only care about
// "did it work" can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  using Error::Error;
};

class ValidationError : public Error {
  using Error::Error;
};

class RangeError : public Error {
  using Error::Error;
};

class CapacityError : public Error {
  using Error::Error;
};

class WraparoundError : public Error {
  using Error::Error;
};

class ConfigurationError : public Error {
  using Error::Error;
};

// Raised when an internal cross-check between two numerical routes fails.
class ConsistencyError : public Error {
  using Error::Error;
};

class NearSingularError : public Error {
 public:
  NearSingularError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// The top of the superoperator spectrum is not a single isolated eigenvalue.
class NonSimpleSpectrumError : public Error {
 public:
  NonSimpleSpectrumError(const std::string& what, double kx, double ky, double q)
      : Error(what), kx_(kx), ky_(ky), q_(q) {}
  double kx() const { return kx_; }
  double ky() const { return ky_; }
  double q() const { return q_; }

 private:
  double kx_, ky_, q_;
};

// The limit theorem's spectral hypothesis fails on too much of the momentum grid.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(const std::string& what, double excluded_fraction)
      : Error(what), excluded_fraction_(excluded_fraction) {}
  double excluded_fraction() const { return excluded_fraction_; }

 private:
  double excluded_fraction_;
};

}  // namespace dqw
