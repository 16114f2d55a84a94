#ifndef UQSTREAM_CONFIG_HPP
#define UQSTREAM_CONFIG_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace uqstream {

/// Flat key/value configuration.
///
/// Grammar, one entry per line:
///
///     line    := blank | comment | entry
///     comment := '#' any*
///     entry   := key ws* '=' ws* value ws* comment?
///     key     := [A-Za-z_][A-Za-z0-9_]*
///
/// Keys may appear at most once. Values are raw strings; typing happens when
/// the entries are applied.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Throws InputError naming the offending line.
ConfigEntries parse_config(std::istream& in);
ConfigEntries load_config(const std::string& path);

}  // namespace uqstream

#endif  // UQSTREAM_CONFIG_HPP
