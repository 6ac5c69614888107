#pragma once

// Flat sectioned key-value documents:
//
//   # comment            ; comment
//   [section]
//   key = value
//
// Keys are case-sensitive; the first '=' separates key from value. Keys outside
// any section are rejected, as are duplicates.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evsynth/error.hpp"
#include "evsynth/network.hpp"
#include "evsynth/text.hpp"

namespace evsynth {

class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::string_view src) {
    KeyValueDocument doc;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(src, '\n')) {
      ++line_no;
      auto line = text::trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      const auto where = " (line " + std::to_string(line_no) + ")";
      if (line.front() == '[') {
        if (line.back() != ']') throw InputError("unterminated section header" + where);
        section = std::string(text::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw InputError("empty section name" + where);
        doc.order_.emplace_back(section, "");
        doc.entries_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw InputError("expected 'key = value'" + where);
      if (section.empty()) throw InputError("key outside of a section" + where);
      std::string key(text::trim(line.substr(0, eq)));
      std::string value(text::trim(line.substr(eq + 1)));
      if (key.empty()) throw InputError("empty key" + where);
      auto& sec = doc.entries_[section];
      if (sec.count(key)) throw InputError("duplicate key '" + section + "." + key + "'" + where);
      sec.emplace(key, value);
      doc.order_.emplace_back(section, key);
    }
    return doc;
  }

  bool has_section(const std::string& s) const { return entries_.count(s) > 0; }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = entries_.find(section);
    if (s == entries_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  void set(const std::string& section, const std::string& key, std::string value) {
    auto& sec = entries_[section];
    if (!sec.count(key)) order_.emplace_back(section, key);
    sec[key] = std::move(value);
  }

  // Keys of one section in document order.
  std::vector<std::pair<std::string, std::string>> items(const std::string& section) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [s, k] : order_)
      if (s == section && !k.empty()) out.emplace_back(k, *get(s, k));
    return out;
  }

  std::vector<std::string> sections() const {
    std::vector<std::string> out;
    for (const auto& [s, v] : entries_) out.push_back(s);
    return out;
  }

  // Rejects sections and keys not in the allow-list. An empty key set means
  // the section accepts arbitrary keys.
  void require_known(const std::map<std::string, std::set<std::string>>& allowed) const {
    for (const auto& [section, keys] : entries_) {
      const auto a = allowed.find(section);
      if (a == allowed.end()) throw InputError("unknown config section [" + section + "]");
      if (a->second.empty()) continue;
      for (const auto& [key, value] : keys)
        if (!a->second.count(key)) throw InputError("unknown config key '" + section + "." + key + "'");
    }
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> entries_;
  std::vector<std::pair<std::string, std::string>> order_;
};

namespace config {

inline double to_double(const std::string& v, const std::string& what) {
  double out = 0.0;
  if (!detail::parse_double(v, out)) throw InputError("'" + what + "' is not a number: '" + v + "'");
  return out;
}

inline long to_long(const std::string& v, const std::string& what) {
  long out = 0;
  if (!detail::parse_long(v, out)) throw InputError("'" + what + "' is not an integer: '" + v + "'");
  return out;
}

inline std::size_t to_count(const std::string& v, const std::string& what) {
  const long n = to_long(v, what);
  if (n <= 0) throw InputError("'" + what + "' must be positive");
  return static_cast<std::size_t>(n);
}

inline bool to_bool(const std::string& v, const std::string& what) {
  const auto s = text::lower(v);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw InputError("'" + what + "' is not a boolean: '" + v + "'");
}

inline std::vector<double> to_doubles(const std::string& v, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : text::split(v, ',')) out.push_back(to_double(std::string(text::trim(part)), what));
  return out;
}

inline std::vector<std::string> to_labels(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& part : text::split(v, ',')) out.emplace_back(text::trim(part));
  return out;
}

}  // namespace config

}  // namespace evsynth
