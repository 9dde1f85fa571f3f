#pragma once

#include <stdexcept>
#include <string>

namespace echolab {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kNonConvergence = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kValidation; }
};

/// Argument outside the mathematical domain of an expression (negative delay, T <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input sits on a removable singularity the caller must handle explicitly.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Dataset, sweep or configuration violates its declared invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// CSV/config parse failure; `line` is 1-based, 0 when not tied to a line.
class SchemaError : public ValidationError {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : ValidationError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The data cannot separate two or more model parameters.
class IdentifiabilityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularJacobianError : public Error {
 public:
  SingularJacobianError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition_number() const noexcept { return condition_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kNonConvergence; }

 private:
  double condition_;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNonConvergence; }
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

}  // namespace echolab
