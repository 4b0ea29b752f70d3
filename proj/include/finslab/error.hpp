#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace finslab {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A ring operation was applied outside its domain (ln/sqrt of a non-positive
// value part, division by zero, abs across zero inside a differentiated region).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, int position = 0)
      : Error(what), position_(position) {}
  int position() const noexcept { return position_; }

 private:
  int position_;
};

// The metric is not a regular Finsler metric at the evaluated state.
class RegularityError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public RegularityError {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : RegularityError(what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

// A quantity needs more derivatives than the configured tower/series budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int position, std::string expected = {})
      : Error("parse error at offset " + std::to_string(position) + ": " + message +
              (expected.empty() ? std::string() : " (expected " + expected + ")")),
        position_(position),
        expected_(std::move(expected)) {}
  int position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  int position_;
  std::string expected_;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace finslab
