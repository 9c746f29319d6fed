#pragma once

#include <cctype>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bpmnsec::enrich {

/// Dotted numeric version with an optional trailing qualifier, e.g. `9.0.30`,
/// `1.1.1k` or `2.0.0-rc1`. Missing trailing components compare as zero; a
/// qualified version sorts before the same unqualified one.
struct Version {
  std::vector<unsigned long long> parts;
  std::string suffix;

  std::strong_ordering operator<=>(const Version& o) const {
    const std::size_t n = std::max(parts.size(), o.parts.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = i < parts.size() ? parts[i] : 0ULL;
      const auto b = i < o.parts.size() ? o.parts[i] : 0ULL;
      if (a != b) return a <=> b;
    }
    if (suffix.empty() != o.suffix.empty()) return suffix.empty() ? std::strong_ordering::greater : std::strong_ordering::less;
    const int c = suffix.compare(o.suffix);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }
  bool operator==(const Version& o) const { return (*this <=> o) == std::strong_ordering::equal; }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += '.';
      out += std::to_string(parts[i]);
    }
    return out + suffix;
  }
};

inline std::optional<Version> parse_version(std::string_view s) {
  Version v;
  std::size_t i = 0;
  while (true) {
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    unsigned long long n = 0;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      if (++digits > 18) return std::nullopt;
      n = n * 10 + static_cast<unsigned long long>(s[i] - '0');
      ++i;
    }
    v.parts.push_back(n);
    if (i + 1 < s.size() && s[i] == '.' && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      ++i;
      continue;
    }
    break;
  }
  std::string_view rest = s.substr(i);
  if (!rest.empty() && (rest.front() == '-' || rest.front() == '_' || rest.front() == '.' || rest.front() == '+'))
    rest.remove_prefix(1);
  for (char c : rest)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') return std::nullopt;
  if (i < s.size() && rest.empty()) return std::nullopt;  // lone separator
  v.suffix = std::string(rest);
  return v;
}

/// Half-open or closed bounds as published with a CPE match. An exact
/// version, when present, takes precedence over bounds.
struct VersionRange {
  std::optional<std::string> exact;
  std::optional<std::string> startIncluding;
  std::optional<std::string> startExcluding;
  std::optional<std::string> endIncluding;
  std::optional<std::string> endExcluding;

  bool operator==(const VersionRange&) const = default;

  /// False when any bound is unparseable.
  bool contains(const Version& v) const {
    auto cmp = [&](const std::optional<std::string>& bound, auto pred) {
      if (!bound) return true;
      auto b = parse_version(*bound);
      return b && pred(v <=> *b);
    };
    if (exact) {
      auto e = parse_version(*exact);
      return e && v == *e;
    }
    return cmp(startIncluding, [](auto o) { return o >= 0; }) && cmp(startExcluding, [](auto o) { return o > 0; }) &&
           cmp(endIncluding, [](auto o) { return o <= 0; }) && cmp(endExcluding, [](auto o) { return o < 0; });
  }
};

}  // namespace bpmnsec::enrich
