#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gencs {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric or count parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during an iterative solve.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Exhaustive search would exceed its evaluation budget.
class InfeasibleScaleError : public Error {
 public:
  using Error::Error;
};

/// Block layout leaves pixels uncovered or is otherwise inconsistent.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Measurement carries no signal energy, so an SNR cannot be realised.
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  bad_magic,
  bad_version,
  malformed_header,
  dimension_mismatch,
  truncated,
  dim_overflow,
  bad_value,
  io,
};

const char* to_string(FormatErrorKind kind) noexcept;

/// Malformed on-disk artifact (weight file, IDX file, signal file, CSV).
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gencs
