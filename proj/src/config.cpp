#include "polarndf/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "polarndf/error.hpp"

namespace polarndf {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep, bool trim_parts) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    auto part = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    out.push_back(trim_parts ? trim(part) : std::string(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::string_view context) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    // from_chars rejects "inf"/"nan" spellings on some libstdc++ builds.
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::Parse, std::string(context) + ": not a number: '" + t + "'");
  }
  return v;
}

long long parse_int(std::string_view s, std::string_view context) {
  const std::string t = trim(s);
  long long v = 0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::Parse, std::string(context) + ": not an integer: '" + t + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view context) {
  const std::string t = trim(s);
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  throw Error(ErrorKind::Parse, std::string(context) + ": not a boolean: '" + t + "'");
}

bool ConfigSection::has(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> ConfigSection::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string ConfigSection::get_string(std::string_view key, std::string_view fallback) const {
  auto v = get(key);
  return v ? *v : std::string(fallback);
}

double ConfigSection::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, "[" + name_ + "] " + std::string(key)) : fallback;
}

long long ConfigSection::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  return v ? parse_int(*v, "[" + name_ + "] " + std::string(key)) : fallback;
}

bool ConfigSection::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  return v ? parse_bool(*v, "[" + name_ + "] " + std::string(key)) : fallback;
}

std::string ConfigSection::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw Error(ErrorKind::Config, "[" + name_ + "] missing key '" + std::string(key) + "'");
  return *v;
}

void ConfigSection::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

ConfigDocument ConfigDocument::parse(std::string_view text, std::string_view origin) {
  ConfigDocument doc;
  doc.sections_.emplace_back("");
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;

    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Parse, where + ": unterminated section header");
      std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (doc.find(name) != nullptr) throw Error(ErrorKind::Parse, where + ": duplicate section [" + name + "]");
      doc.sections_.emplace_back(std::move(name));
      continue;
    }
    auto& sec = doc.sections_.back();
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      sec.add_item(line);
      continue;
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::Parse, where + ": empty key");
    if (sec.has(key)) throw Error(ErrorKind::Parse, where + ": duplicate key '" + key + "'");
    sec.set(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const ConfigSection* ConfigDocument::find(std::string_view section) const {
  for (const auto& s : sections_) {
    if (s.name() == section) return &s;
  }
  return nullptr;
}

const ConfigSection& ConfigDocument::section(std::string_view name) const {
  static const ConfigSection empty;
  const auto* s = find(name);
  return s ? *s : empty;
}

ConfigSection& ConfigDocument::mutable_section(std::string_view name) {
  for (auto& s : sections_) {
    if (s.name() == name) return s;
  }
  return sections_.emplace_back(std::string(name));
}

std::string ConfigDocument::to_string() const {
  std::ostringstream os;
  for (const auto& s : sections_) {
    if (s.entries().empty() && s.items().empty()) continue;
    if (!s.name().empty()) os << "[" << s.name() << "]\n";
    for (const auto& [k, v] : s.entries()) os << k << " = " << v << "\n";
    for (const auto& item : s.items()) os << item << "\n";
    os << "\n";
  }
  return os.str();
}

}  // namespace polarndf
