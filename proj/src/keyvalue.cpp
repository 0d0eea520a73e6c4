#include "clbf/keyvalue.hpp"

#include <charconv>
#include <cmath>

#include "clbf/errors.hpp"

namespace clbf {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  return std::nullopt;
}

KeyValueFile KeyValueFile::parse(std::string_view text) {
  KeyValueFile file;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;

    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(ConfigErrorKind::kSyntax, line_no,
                        "expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(ConfigErrorKind::kSyntax, line_no, "empty key");
    for (char c : key) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '_' || c == '.';
      if (!ok) {
        throw ConfigError(ConfigErrorKind::kSyntax, line_no, "invalid character in key '" + key + "'");
      }
    }
    if (file.entries_.count(key)) {
      throw ConfigError(ConfigErrorKind::kDuplicateKey, line_no,
                        "key '" + key + "' already set on line " +
                            std::to_string(file.entries_.at(key).line));
    }
    file.entries_.emplace(key, Entry{value, line_no});
    if (end == text.size()) break;
  }
  return file;
}

const KeyValueFile::Entry* KeyValueFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const KeyValueFile::Entry& KeyValueFile::require(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError(ConfigErrorKind::kMissingKey, 0, "required key '" + key + "' not found");
  return *e;
}

double KeyValueFile::get_double(const std::string& key) const {
  const Entry& e = require(key);
  const auto v = parse_double(e.value);
  if (!v || !std::isfinite(*v)) {
    throw ConfigError(ConfigErrorKind::kBadValue, e.line, "'" + key + "' is not a finite real: '" + e.value + "'");
  }
  return *v;
}

int KeyValueFile::get_int(const std::string& key) const {
  const Entry& e = require(key);
  const auto v = parse_integer(e.value);
  if (!v) throw ConfigError(ConfigErrorKind::kBadValue, e.line, "'" + key + "' is not an integer: '" + e.value + "'");
  return static_cast<int>(*v);
}

bool KeyValueFile::get_bool(const std::string& key) const {
  const Entry& e = require(key);
  const auto v = parse_bool(e.value);
  if (!v) throw ConfigError(ConfigErrorKind::kBadValue, e.line, "'" + key + "' is not a boolean: '" + e.value + "'");
  return *v;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  const Entry& e = require(key);
  std::vector<double> out;
  for (std::string_view part : split(e.value, ',')) {
    const auto v = parse_double(part);
    if (!v || !std::isfinite(*v)) {
      throw ConfigError(ConfigErrorKind::kBadValue, e.line, "'" + key + "' has a non-real entry '" + std::string(part) + "'");
    }
    out.push_back(*v);
  }
  return out;
}

std::vector<int> KeyValueFile::get_ints(const std::string& key) const {
  const Entry& e = require(key);
  std::vector<int> out;
  for (std::string_view part : split(e.value, ',')) {
    const auto v = parse_integer(part);
    if (!v) {
      throw ConfigError(ConfigErrorKind::kBadValue, e.line, "'" + key + "' has a non-integer entry '" + std::string(part) + "'");
    }
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

}  // namespace clbf
