#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ofgsc::config {

// Sectioned key = value text. Keys are addressed as "section.key".
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void erase_section(const std::string& section);

  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) const;

  std::vector<std::string> sections() const;
  // Sections and keys sorted; stable across parse/serialize round trips.
  std::string canonical() const;
  std::string digest() const;  // 16 hex digits of the canonical text hash

 private:
  std::map<std::string, std::map<std::string, std::string>> entries_;
  std::string origin_;
};

// Accepts "inf" / "-inf" in addition to ordinary decimal forms.
double parse_real(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text);

}  // namespace ofgsc::config
