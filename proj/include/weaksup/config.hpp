#pragma once

#include "weaksup/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace weaksup {

// Flat key-value configuration. One `key = value` pair per line, `#` starts
// a comment, arrays are comma-separated values. Keys carry section prefixes
// such as `sweep.n_grid`.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text);

  // Applies a single "key=value" override string.
  void apply_override(const std::string& key_value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get_str(const std::string& key) const;
  std::string get_str_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long_or(const std::string& key, long fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long> get_longs(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_long(const std::string& key, long value);
  void set_doubles(const std::string& key, const std::vector<double>& values);

  std::vector<std::string> keys() const;

  // Sorted `key = value` lines; the canonical on-disk form.
  std::string canonical_text() const;
  std::uint64_t content_hash() const;
  void write_file(const std::string& path) const;

  // Throws ConfigError if any present key is neither listed exactly nor
  // covered by one of the allowed prefixes ("sweep." style).
  void require_known(const std::vector<std::string>& exact,
                     const std::vector<std::string>& prefixes) const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_csv(const std::string& text);
double parse_double(const std::string& text, const std::string& what);
long parse_long(const std::string& text, const std::string& what);

}  // namespace weaksup
