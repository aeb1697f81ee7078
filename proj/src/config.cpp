#include "ofgsc/config.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "ofgsc/seed.hpp"
#include "ofgsc/video.hpp"

namespace ofgsc::config {

namespace {

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
    throw std::logic_error("config key must be section.key: " + key);
  return {key.substr(0, dot), key.substr(dot + 1)};
}

}  // namespace

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = boost::algorithm::trim_copy(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || std::isnan(v))
    throw InputError(what + ": not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InputError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Config c;
  c.origin_ = origin;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw InputError(origin + ": key '" + section + "' outside a section");
    auto& dest = c.entries_[section];
    for (const auto& [key, value] : body) dest[key] = value.data();
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Config::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> Config::get(const std::string& key) const {
  const auto [section, name] = split_key(key);
  const auto s = entries_.find(section);
  if (s == entries_.end()) return std::nullopt;
  const auto k = s->second.find(name);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto [section, name] = split_key(key);
  entries_[section][name] = value;
}

void Config::erase_section(const std::string& section) { entries_.erase(section); }

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::real(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_real(*v, origin_ + ": " + key) : fallback;
}

long long Config::integer(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const long long r = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE)
    throw InputError(origin_ + ": " + key + ": not an integer: '" + *v + "'");
  return r;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const unsigned long long r = std::strtoull(v->c_str(), &end, 10);
  if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size() || errno == ERANGE)
    throw InputError(origin_ + ": " + key + ": not an unsigned integer: '" + *v + "'");
  return r;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw InputError(origin_ + ": " + key + ": not a boolean: '" + *v + "'");
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_real(item, origin_ + ": " + key));
  if (out.empty()) throw InputError(origin_ + ": " + key + ": empty list");
  return out;
}

std::vector<std::string> Config::strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const auto v = get(key);
  return v ? split_list(*v) : fallback;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [s, body] : entries_) out.push_back(s);
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [section, body] : entries_) {
    out += "[" + section + "]\n";
    for (const auto& [key, value] : body) out += key + " = " + value + "\n";
    out += "\n";
  }
  return out;
}

std::string Config::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(canonical()));
  return buf;
}

}  // namespace ofgsc::config
