#include "airbeam/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "airbeam/errors.hpp"

namespace airbeam {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("'" + key + "' must be finite");
  }
  return value;
}

}  // namespace

void Settings::declare(const std::string& key, const std::string& default_value, const std::string& help) {
  entries_[key] = Entry{default_value, default_value, help};
}

const Settings::Entry& Settings::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

void Settings::set(const std::string& key, const std::string& value) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second.value = trim(value);
}

void Settings::parse_text(std::string_view text, const std::string& source) {
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    try {
      set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Settings::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  parse_text(text.str(), path.string());
}

void Settings::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value: '" + assignment + "'");
  set(trim(std::string_view(assignment).substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& Settings::get_string(const std::string& key) const { return entry(key).value; }

double Settings::get_double(const std::string& key) const { return parse_number<double>(get_string(key), key); }

std::int64_t Settings::get_int(const std::string& key) const {
  return parse_number<std::int64_t>(get_string(key), key);
}

std::uint64_t Settings::get_uint(const std::string& key) const {
  const std::string& text = get_string(key);
  if (!text.empty() && text[0] == '-') throw ConfigError("'" + key + "' must not be negative");
  return parse_number<std::uint64_t>(text, key);
}

bool Settings::get_bool(const std::string& key) const {
  const std::string& v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> Settings::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const std::string& text = get_string(key);
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_number<double>(parts[0], key));
    } else if (parts.size() == 3) {
      const double first = parse_number<double>(parts[0], key);
      const double step = parse_number<double>(parts[1], key);
      const double last = parse_number<double>(parts[2], key);
      if (!(step > 0.0) || last < first) throw ConfigError("'" + key + "': range needs step > 0 and start <= stop");
      const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
      if (count > 1000000) throw ConfigError("'" + key + "': range expands to too many values");
      for (std::size_t k = 0; k < count; ++k) out.push_back(first + static_cast<double>(k) * step);
    } else {
      throw ConfigError("'" + key + "': list items are numbers or start:step:stop");
    }
  }
  return out;
}

std::vector<std::string> Settings::get_strings(const std::string& key) const {
  const std::string& text = get_string(key);
  if (text.empty()) return {};
  auto items = split(text, ',');
  for (const auto& item : items)
    if (item.empty()) throw ConfigError("'" + key + "' has an empty list item");
  return items;
}

std::string Settings::canonical() const {
  std::string out;
  for (const auto& [key, e] : entries_) out += key + " = " + e.value + "\n";
  return out;
}

std::string Settings::describe() const {
  std::string out;
  for (const auto& [key, e] : entries_) out += "# " + e.help + "\n" + key + " = " + e.default_value + "\n";
  return out;
}

}  // namespace airbeam
