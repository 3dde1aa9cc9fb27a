#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mediator {

/// Base class for all errors raised by the library. Validation problems
/// (bad input data, bad configuration) derive from ValidationError;
/// numerical problems (singular systems, diverged optimizers) derive
/// from NumericalError. The CLI maps the two branches to exit codes 2 and 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

// dataset
struct MissingColumnError : ValidationError {
  explicit MissingColumnError(const std::string& name)
      : ValidationError("missing column: " + name), column(name) {}
  std::string column;
};

struct NonNumericCellError : ValidationError {
  NonNumericCellError(std::size_t row, const std::string& col)
      : ValidationError("non-numeric cell at row " + std::to_string(row) + ", column " + col),
        row(row), column(col) {}
  std::size_t row;
  std::string column;
};

struct MissingValueError : ValidationError {
  MissingValueError(std::size_t row, const std::string& col)
      : ValidationError("missing value at row " + std::to_string(row) + ", column " + col),
        row(row), column(col) {}
  std::size_t row;
  std::string column;
};

struct RoleConflictError : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidFoldCountError : ValidationError {
  explicit InvalidFoldCountError(int v, std::size_t n)
      : ValidationError("invalid fold count " + std::to_string(v) + " for n = " + std::to_string(n)) {}
};

// learners
struct ArityMismatchError : ValidationError {
  ArityMismatchError(std::size_t got, std::size_t expected)
      : ValidationError("feature arity " + std::to_string(got) + " does not match training arity " +
                        std::to_string(expected)) {}
};

// riesz
struct NonFiniteLossError : NumericalError {
  using NumericalError::NumericalError;
};

struct SingularGramError : NumericalError {
  using NumericalError::NumericalError;
};

struct DivergedLossError : NumericalError {
  using NumericalError::NumericalError;
};

// estimands
struct MocPresentError : ValidationError {
  using ValidationError::ValidationError;
};

struct MocAbsentError : ValidationError {
  using ValidationError::ValidationError;
};

struct MissingZpiError : ValidationError {
  using ValidationError::ValidationError;
};

struct FamilyRoleMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

// engine
struct LengthMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

struct NonFiniteEstimateError : NumericalError {
  using NumericalError::NumericalError;
};

struct MissingFunctionalError : ValidationError {
  using ValidationError::ValidationError;
};

struct ZeroSeError : NumericalError {
  using NumericalError::NumericalError;
};

// oracle
struct EquationEvalError : NumericalError {
  using NumericalError::NumericalError;
};

struct UnknownTwinNameError : ValidationError {
  using ValidationError::ValidationError;
};

// cli / config
struct UnknownEffectError : ValidationError {
  using ValidationError::ValidationError;
};

struct BadPolicyError : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace mediator
