#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qabias {

/// Coarse failure class; the CLI maps each kind onto an exit code.
enum class ErrorKind { Usage, Validation, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed input bytes (bad JSON, wrong value types).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// Missing or contradictory configuration (e.g. a heuristic without its dependency).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Non-fatal diagnostics collected by loaders and estimators.
using Warnings = std::vector<std::string>;

}  // namespace qabias
