#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clbf {

/// Line-oriented `key = value` text. `#` starts a comment that runs to the end of
/// the line; blank lines are ignored; keys are unique.
class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::string_view text);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry* find(const std::string& key) const;
  /// Throws ConfigError(kMissingKey) when absent.
  const Entry& require(const std::string& key) const;

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated list of reals.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);
std::optional<bool> parse_bool(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace clbf
