#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fastdeco {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// A cross-section model produced an invalid (negative or non-finite) value.
class ModelError : public Error {
public:
  using Error::Error;
};

// An approximation was requested outside its validity regime.
class RegimeError : public Error {
public:
  using Error::Error;
};

// A numerical procedure could not reach its tolerance.
class ToleranceError : public Error {
public:
  ToleranceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

// A non-finite value appeared while averaging over the bath.
class PropagationError : public Error {
public:
  using Error::Error;
};

// Finite-difference grid too small or test field not decayed at the boundary.
class GridError : public Error {
public:
  using Error::Error;
};

// Stochastic step refused (time step above the accuracy guard).
class StepRejected : public Error {
public:
  using Error::Error;
};

// Malformed input file. Carries the offending line (1-based, 0 if unknown).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace fastdeco
