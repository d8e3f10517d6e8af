#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace phrasecomp {

// Flat `key = value` configuration text. Blank lines and lines whose first
// non-blank character is '#' are ignored; whitespace around keys and values
// is trimmed. A repeated key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::string& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  void set(std::string key, std::string value);

  const std::map<std::string, std::string, std::less<>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

// Strict conversions used for config values and CLI strings; they throw
// InvalidArgument naming `what` on malformed text.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

}  // namespace phrasecomp
