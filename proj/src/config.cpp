#include "sgdlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sgdlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected `key = value`");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.count(key))
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": duplicate key `" + key + "`");
    cfg[key] = value;
  }
  return cfg;
}

std::string emit_config(const Config& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

bool ConfigReader::has(const std::string& key) const { return cfg_.count(key) > 0; }

const std::string& ConfigReader::raw(const std::string& key) const {
  auto it = cfg_.find(key);
  if (it == cfg_.end()) throw std::invalid_argument("config: missing key `" + key + "`");
  read_.insert(key);
  return it->second;
}

std::string ConfigReader::get_string(const std::string& key) const { return raw(key); }

std::string ConfigReader::get_string(const std::string& key,
                                     const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double ConfigReader::get_double(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key `" + key + "` is not a number: `" + s + "`");
  }
}

double ConfigReader::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long ConfigReader::get_long(const std::string& key) const {
  const std::string& s = raw(key);
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) {
      // Allow scientific shorthand (1e6) for iteration counts.
      double d = std::stod(s, &pos);
      if (pos != s.size() || d != std::floor(d) || std::abs(d) > 9e18)
        throw std::invalid_argument("");
      return static_cast<long>(d);
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key `" + key + "` is not an integer: `" + s + "`");
  }
}

long ConfigReader::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

bool ConfigReader::get_bool(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: key `" + key + "` is not a boolean: `" + s + "`");
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> ConfigReader::get_vector(const std::string& key) const {
  const std::string& s = raw(key);
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (t.empty())
      throw std::invalid_argument("config: key `" + key + "` has an empty vector entry");
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(t, &pos));
      if (pos != t.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key `" + key + "` has a non-numeric entry: `" +
                                  t + "`");
    }
  }
  if (out.empty())
    throw std::invalid_argument("config: key `" + key + "` is an empty vector");
  return out;
}

std::vector<double> ConfigReader::get_vector(const std::string& key,
                                             const std::vector<double>& fallback) const {
  return has(key) ? get_vector(key) : fallback;
}

std::map<std::string, std::string> ConfigReader::group(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  std::string dotted = prefix + ".";
  for (const auto& [k, v] : cfg_) {
    if (k.rfind(dotted, 0) == 0) {
      out[k.substr(dotted.size())] = v;
      read_.insert(k);
    }
  }
  return out;
}

std::vector<std::string> ConfigReader::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : cfg_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    int len = std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + len, back);
    if (back == v) return std::string(buf, len);
  }
  return std::string(buf);
}

}  // namespace sgdlab
