#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tfgsmooth {

/// Argument outside the domain of a map (e.g. logarithm at the branch cut).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Matrix that must be symmetric positive definite or invertible is not.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (ordering, missing records).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or directory that cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text input that fails to parse; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Normal-equation factorization failure inside the smoother.
class SolverError : public std::runtime_error {
 public:
  SolverError(int iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace tfgsmooth
