#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bvm {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class KindMismatchError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NoRootError : public Error {
 public:
  NoRootError(double lo, double hi)
      : Error("no sign change of the displacement residual in [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}

  double bracket_low() const noexcept { return lo_; }
  double bracket_high() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// Raised when no state with nonzero likelihood can be found to start a chain.
// Carries the closest state seen and its largest absolute residual.
class InfeasibleStartError : public Error {
 public:
  InfeasibleStartError(std::vector<double> best_state, double nearest_miss, std::size_t attempts)
      : Error("no feasible chain start after " + std::to_string(attempts) +
              " candidates; nearest-miss max residual " + std::to_string(nearest_miss)),
        best_state_(std::move(best_state)),
        nearest_miss_(nearest_miss) {}

  const std::vector<double>& best_state() const noexcept { return best_state_; }
  double nearest_miss() const noexcept { return nearest_miss_; }

 private:
  std::vector<double> best_state_;
  double nearest_miss_;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

class UndefinedComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace bvm
