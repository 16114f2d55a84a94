#include "uqstream/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>

#include "uqstream/errors.hpp"

namespace uqstream {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || std::isdigit(static_cast<unsigned char>(key.front()))) return false;
  return std::all_of(key.begin(), key.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

}  // namespace

ConfigEntries parse_config(std::istream& in) {
  ConfigEntries entries;
  std::string raw;
  for (int lineno = 1; std::getline(in, raw); ++lineno) {
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw InputError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw InputError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw InputError(where + ": empty value for '" + key + "'");
    const bool duplicate = std::any_of(entries.begin(), entries.end(),
                                       [&](const auto& e) { return e.first == key; });
    if (duplicate) throw InputError(where + ": duplicate key '" + key + "'");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

ConfigEntries load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file " + path);
  return parse_config(f);
}

}  // namespace uqstream
