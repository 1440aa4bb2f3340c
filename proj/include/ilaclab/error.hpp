#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ilac {

/// Bad parameters or violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A periodic box with two sites along an axis would connect the same pair
/// of sites twice.
class PeriodicDoubleEdge : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Measures built by different estimators cannot be combined or compared.
class EstimatorMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NotCovariant : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative eigenvalue search exhausted its sweep budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Numerical failure inside one Monte-Carlo realization.
class RealizationError : public std::runtime_error {
 public:
  RealizationError(const std::string& what, std::uint64_t realization)
      : std::runtime_error(what), realization_(realization) {}
  std::uint64_t realization() const noexcept { return realization_; }

 private:
  std::uint64_t realization_;
};

}  // namespace ilac
