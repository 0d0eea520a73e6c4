#pragma once

#include <stdexcept>
#include <string>

namespace clbf {

/// Bad argument: wrong dimension, out-of-range value, violated precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Name not found in a catalog.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Query against an object that cannot answer it (e.g. gradient at an unsafe node).
class QueryError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ConfigErrorKind {
  kSyntax,
  kMissingKey,
  kDuplicateKey,
  kUnknownKey,
  kBadValue,
  kDriftNonzeroAtOrigin,
  kOriginUnsafe,
};

const char* to_string(ConfigErrorKind kind);

/// Diagnostic raised while reading configuration text. `line` is 1-based, 0 when
/// the error is not tied to a single line (e.g. a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, int line, const std::string& message);

  ConfigErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  ConfigErrorKind kind_;
  int line_;
};

}  // namespace clbf
