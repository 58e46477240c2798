#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace odesens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: mismatched dimensions, bad tolerances, bad chunking.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic failure inside an AD scalar (division by a zero value).
class ArithmeticError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an elementary function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Query outside a valid range (e.g. interpolation outside the time span).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// The right-hand side used an operation the tape cannot record.
class RecordingError : public Error {
 public:
  explicit RecordingError(std::string op)
      : Error("operation not supported by the tape: " + op), op_(std::move(op)) {}
  [[nodiscard]] const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// A recorded branch guard evaluated differently on replay; the tape must be re-recorded.
class TapeInvalidated : public Error {
 public:
  using Error::Error;
};

/// A linear solve hit a singular (or non-finite) pivot.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// A solve that the caller cannot continue without did not reach tf.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Root bracketing failed to converge.
class RootFindError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature exhausted its subdivision budget.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, std::size_t segment, std::vector<double> best)
      : Error(what), segment_(segment), best_(std::move(best)) {}
  [[nodiscard]] std::size_t segment() const noexcept { return segment_; }
  [[nodiscard]] const std::vector<double>& best_estimate() const noexcept { return best_; }

 private:
  std::size_t segment_;
  std::vector<double> best_;
};

}  // namespace odesens
