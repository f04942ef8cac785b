#pragma once

// Strict INI-style run configuration: [section] headers, key = value lines,
// '#' or ';' comments. Unknown sections or keys are rejected with their line
// number so that misspelled physics parameters never pass silently.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sivnems {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class RunConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static RunConfig parse_string(const std::string& text, const std::string& origin = "<string>") {
    RunConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        section = strip(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        cfg.sections_[section];
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
      const std::string key = strip(s.substr(0, eq));
      const std::string value = strip(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      auto& sec = cfg.sections_[section];
      if (sec.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      sec[key] = Entry{value, lineno};
    }
    return cfg;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  // Reject anything not listed in the schema, reporting its location.
  void validate_schema(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, entries] : sections_) {
      const auto it = schema.find(section);
      if (it == schema.end())
        throw ConfigError(origin_ + ": unknown section [" + section + "]");
      for (const auto& [key, entry] : entries)
        if (!it->second.count(key))
          throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                            "' in section [" + section + "]");
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    const auto kt = it->second.find(key);
    return kt == it->second.end() ? fallback : kt->second.value;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    const auto kt = it->second.find(key);
    if (kt == it->second.end()) return fallback;
    return parse_double(section, key, kt->second);
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    const auto kt = it->second.find(key);
    if (kt == it->second.end()) return fallback;
    try {
      size_t pos = 0;
      const std::int64_t v = std::stoll(kt->second.value, &pos);
      if (pos != kt->second.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ":" + std::to_string(kt->second.line) + ": key '" + key +
                        "' in [" + section + "] is not an integer: '" + kt->second.value + "'");
    }
  }

  // Stable snapshot of every parsed entry, for output-file provenance.
  std::vector<std::string> snapshot_lines() const {
    std::vector<std::string> out;
    for (const auto& [section, entries] : sections_) {
      for (const auto& [key, entry] : entries)
        out.push_back(section + "." + key + " = " + entry.value);
    }
    return out;
  }

 private:
  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  double parse_double(const std::string& section, const std::string& key,
                      const Entry& entry) const {
    try {
      size_t pos = 0;
      const double v = std::stod(entry.value, &pos);
      if (pos != entry.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": key '" + key + "' in [" +
                        section + "] is not a number: '" + entry.value + "'");
    }
  }

  std::string origin_ = "<none>";
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace sivnems
