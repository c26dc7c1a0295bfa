#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace sgdlab {

// Flat key/value config: one `key = value` per line, `#` comments, dotted keys
// for grouping (objective.name, schedule.p). Keys are unique; emit() writes
// them sorted so parse(emit(cfg)) == cfg.
using Config = std::map<std::string, std::string>;

Config parse_config(const std::string& text);
std::string emit_config(const Config& cfg);
Config load_config_file(const std::string& path);

// Typed accessor that records which keys were read, so callers can reject
// configs containing unknown keys (usually typos).
class ConfigReader {
 public:
  explicit ConfigReader(const Config& cfg) : cfg_(cfg) {}

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_vector(const std::string& key) const;
  std::vector<double> get_vector(const std::string& key,
                                 const std::vector<double>& fallback) const;

  // Keys sharing a dotted prefix, e.g. prefix "objective" matches
  // "objective.name" and marks every such key as read.
  std::map<std::string, std::string> group(const std::string& prefix) const;

  std::vector<std::string> unused_keys() const;

 private:
  const std::string& raw(const std::string& key) const;
  const Config& cfg_;
  mutable std::set<std::string> read_;
};

// Canonical scalar formatting shared by emit_config and the report writers:
// shortest decimal string that round-trips the double.
std::string format_double(double v);

}  // namespace sgdlab
