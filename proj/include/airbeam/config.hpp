#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace airbeam {

/// Flat `key = value` settings with '#' comments. Only declared keys are
/// accepted; every value starts from its declared default.
class Settings {
 public:
  void declare(const std::string& key, const std::string& default_value, const std::string& help);

  void parse_text(std::string_view text, const std::string& source);
  void parse_file(const std::filesystem::path& path);
  /// Accepts "key=value" as given on the command line.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated numbers; an item "a:step:b" expands to a, a+step, ... <= b.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  /// Every key in sorted order as "key = value", one per line.
  std::string canonical() const;
  /// Commented listing of keys, defaults and help text.
  std::string describe() const;

 private:
  struct Entry {
    std::string value;
    std::string default_value;
    std::string help;
  };
  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace airbeam
