#ifndef FILIPPOV_ERROR_HPP
#define FILIPPOV_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace filippov {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Non-finite value or missing binding during evaluation.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Scenario or system model is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined at the requested point.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace filippov

#endif  // FILIPPOV_ERROR_HPP
