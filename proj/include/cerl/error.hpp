#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cerl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible dimensions between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse: stale tapes, stepping a finished episode, degenerate requests.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cerl
