#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polarndf {

// Plain-text structured config:
//
//   # comment
//   key = value            (top level, section "")
//   [section]
//   key = value
//   bare list item         (kept in order as a list entry)
//
// Keys are unique within a section. Values are trimmed strings; typed
// accessors parse on demand.
class ConfigSection {
 public:
  explicit ConfigSection(std::string name = {}) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::vector<std::string>& items() const { return items_; }

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string require(std::string_view key) const;

  void set(std::string key, std::string value);
  void add_item(std::string item) { items_.push_back(std::move(item)); }

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> items_;
};

class ConfigDocument {
 public:
  static ConfigDocument parse(std::string_view text, std::string_view origin = "<string>");
  static ConfigDocument load(const std::filesystem::path& path);

  const ConfigSection* find(std::string_view section) const;
  // Returns an empty section when absent.
  const ConfigSection& section(std::string_view name) const;
  ConfigSection& mutable_section(std::string_view name);
  const std::vector<ConfigSection>& sections() const { return sections_; }

  std::string to_string() const;

 private:
  std::vector<ConfigSection> sections_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep, bool trim_parts = true);
double parse_double(std::string_view s, std::string_view context);
long long parse_int(std::string_view s, std::string_view context);
bool parse_bool(std::string_view s, std::string_view context);

}  // namespace polarndf
