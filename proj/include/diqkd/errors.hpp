#pragma once

#include <stdexcept>
#include <string>

namespace diqkd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad dimensions, out-of-range parameters, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue ordering violated in angle recovery.
class OrderingError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A stated precondition of an operation does not hold for the input.
class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// An iterative method failed to converge or produced non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  explicit NumericalError(const std::string& what) : Error(what), residual_(0.0) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// No density matrix satisfies the requested constraints.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double max_attainable)
      : Error(what), max_attainable_(max_attainable) {}

  double max_attainable() const noexcept { return max_attainable_; }

 private:
  double max_attainable_;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace diqkd
