#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <complex>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cgostab/errors.hpp"

namespace cgostab {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line(line) {}
  int line;
};

/// Flat `section.key = value` text. `#` starts a comment; blank lines are
/// ignored; keys have at most one dot and may appear once.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(std::string_view text, std::string source = "<config>") {
    Config cfg;
    cfg.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string s = trim(raw);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(cfg.source_, line, "expected 'key = value'");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (!valid_key(key)) throw ConfigError(cfg.source_, line, "malformed key '" + key + "'");
      if (value.empty()) throw ConfigError(cfg.source_, line, "empty value for '" + key + "'");
      if (cfg.entries_.count(key) != 0) {
        throw ConfigError(cfg.source_, line,
                          "duplicate key '" + key + "' (first set on line " + std::to_string(cfg.entries_[key].line) + ")");
      }
      cfg.entries_[key] = {value, line};
    }
    return cfg;
  }

  /// Reads a file; the name `default` selects `fallback_text` instead.
  static Config load(const std::string& path, std::string_view fallback_text) {
    if (path == "default") return parse(fallback_text, "default");
    std::ifstream f(path);
    if (!f) throw ConfigError(path, 0, "cannot open config file");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse(buf.str(), path);
  }

  /// Entries of `base` that this config does not set.
  Config& inherit(const Config& base) {
    for (const auto& [k, e] : base.entries_) entries_.try_emplace(k, e);
    return *this;
  }

  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, e] : entries_) {
      if (known.count(k) == 0) throw ConfigError(source_, e.line, "unknown key '" + k + "'");
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& source() const { return source_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::string get_string(const std::string& key) const { return entry(key).value; }

  double get_double(const std::string& key) const {
    const Entry& e = entry(key);
    return parse_double(e.value, key, e.line);
  }

  int get_int(const std::string& key) const {
    const Entry& e = entry(key);
    int out = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
      throw ConfigError(source_, e.line, key + ": expected an integer, got '" + e.value + "'");
    }
    return out;
  }

  std::complex<double> get_complex(const std::string& key) const {
    const Entry& e = entry(key);
    return parse_complex(e.value, key, e.line);
  }

  // Comma-separated complex numbers such as `0, 0.1, -0.1i, 0.2+0.1i`.
  std::vector<std::complex<double>> get_complex_list(const std::string& key) const {
    const Entry& e = entry(key);
    std::vector<std::complex<double>> out;
    for (const auto& item : split(e.value, ',')) out.push_back(parse_complex(trim(item), key, e.line));
    return out;
  }

  // `;`-separated records of whitespace-separated numbers.
  std::vector<std::vector<double>> get_records(const std::string& key, std::size_t width) const {
    const Entry& e = entry(key);
    std::vector<std::vector<double>> out;
    if (trim(e.value) == "none") return out;
    for (const auto& rec : split(e.value, ';')) {
      std::istringstream in(rec);
      std::vector<double> fields;
      std::string tok;
      while (in >> tok) fields.push_back(parse_double(tok, key, e.line));
      if (fields.size() != width) {
        throw ConfigError(source_, e.line,
                          key + ": each record needs " + std::to_string(width) + " numbers, got '" + trim(rec) + "'");
      }
      out.push_back(std::move(fields));
    }
    return out;
  }

  int line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_, line_of(key), key + ": " + what);
  }

 private:
  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_, 0, "missing key '" + key + "'");
    return it->second;
  }

  static std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
  }

  static bool valid_key(const std::string& key) {
    if (key.empty() || std::count(key.begin(), key.end(), '.') > 1) return false;
    if (key.front() == '.' || key.back() == '.') return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
      return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_' ||
             c == '.';
    });
  }

  double parse_double(const std::string& text, const std::string& key, int line) const {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ConfigError(source_, line, key + ": expected a number, got '" + text + "'");
    }
    return out;
  }

  // a, bi, a+bi, a-bi
  std::complex<double> parse_complex(const std::string& text, const std::string& key, int line) const {
    auto bad = [&]() -> ConfigError {
      return ConfigError(source_, line, key + ": expected a complex number like 0.1-0.2i, got '" + text + "'");
    };
    if (text.empty()) throw bad();
    if (text.back() != 'i') return {parse_double(text, key, line), 0.0};
    const std::string body = text.substr(0, text.size() - 1);
    std::size_t split_at = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
      if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
        split_at = k;
        break;
      }
    }
    auto imag_of = [&](const std::string& s) {
      if (s.empty() || s == "+") return 1.0;
      if (s == "-") return -1.0;
      return parse_double(s.front() == '+' ? s.substr(1) : s, key, line);
    };
    try {
      if (split_at == std::string::npos) return {0.0, imag_of(body)};
      return {parse_double(body.substr(0, split_at), key, line), imag_of(body.substr(split_at))};
    } catch (const ConfigError&) {
      throw bad();
    }
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace cgostab
