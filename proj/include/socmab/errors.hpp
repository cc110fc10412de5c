#pragma once

#include <stdexcept>
#include <string>

namespace socmab {

// Precondition violated by a numeric or domain argument.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller-supplied value failed validation (Likert range, unknown card, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Event arrived in a state that does not accept it.
class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Duplicate of an at-most-once action (second selection, second finalization).
class ConflictError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Bad configuration or unreadable/malformed input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace socmab
