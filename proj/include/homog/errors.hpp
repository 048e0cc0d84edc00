#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

/// Bad argument shape or count (empty input, mismatched grids, i > j, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite value or violated a numeric contract.
/// `step` is the grid index where it happened, or -1 when not applicable.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::int64_t step = -1,
               std::vector<double> state = {}, double fast = 0.0)
      : std::runtime_error(what), step_(step), state_(std::move(state)),
        fast_(fast) {}

  std::int64_t step() const { return step_; }
  const std::vector<double>& state() const { return state_; }
  double fast_value() const { return fast_; }

 private:
  std::int64_t step_;
  std::vector<double> state_;
  double fast_;
};

}  // namespace homog
