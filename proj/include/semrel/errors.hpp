#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semrel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input that cannot be skipped (garbled header, unparseable record).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A mathematical precondition failed (zero-norm vector, empty mask, empty corpus).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class OovError : public Error {
 public:
  explicit OovError(std::string term)
      : Error("out-of-vocabulary term: '" + term + "'"), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Cross-source key collision at corpus merge time.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A phase was asked to run before the artifacts it reads exist.
class PrerequisiteError : public Error {
 public:
  using Error::Error;
};

}  // namespace semrel
