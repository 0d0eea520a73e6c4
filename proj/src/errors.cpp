#include "clbf/errors.hpp"

namespace clbf {

const char* to_string(ConfigErrorKind kind) {
  switch (kind) {
    case ConfigErrorKind::kSyntax:
      return "syntax error";
    case ConfigErrorKind::kMissingKey:
      return "missing key";
    case ConfigErrorKind::kDuplicateKey:
      return "duplicate key";
    case ConfigErrorKind::kUnknownKey:
      return "unknown key";
    case ConfigErrorKind::kBadValue:
      return "bad value";
    case ConfigErrorKind::kDriftNonzeroAtOrigin:
      return "f(0) != 0";
    case ConfigErrorKind::kOriginUnsafe:
      return "origin not in safe set";
  }
  return "config error";
}

namespace {

std::string format_message(ConfigErrorKind kind, int line, const std::string& message) {
  std::string out = to_string(kind);
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": " + message;
  return out;
}

}  // namespace

ConfigError::ConfigError(ConfigErrorKind kind, int line, const std::string& message)
    : std::runtime_error(format_message(kind, line, message)), kind_(kind), line_(line) {}

}  // namespace clbf
