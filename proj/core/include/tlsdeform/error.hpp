#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlsdeform {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation received an empty cloud or sequence where data is required.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Input geometry does not support the operation (collinear, zero area, too few points).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A type invariant was violated (non-finite coordinate, non-orthonormal rotation, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside its admissible range.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Registration could not produce a transform.
class RegistrationError : public Error {
 public:
  using Error::Error;
};

/// A text input could not be parsed. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tlsdeform
