#pragma once

#include <stdexcept>
#include <string>

namespace spectralab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// Raised by the optimizer before any parameter is touched.
class NonfiniteGradientError : public Error {
 public:
  NonfiniteGradientError(const std::string& parameter)
      : Error("nonfinite gradient in parameter '" + parameter + "'"), parameter_(parameter) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// Caller violated a documented precondition that is not a shape or range problem.
class ContractError : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectralab
