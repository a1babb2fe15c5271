#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ff {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "bench-return-rate", "derive-hamiltonian", "kspace-map",  "exciton",
      "gamma-scan",        "absorbance-ed",      "pomeranchuk", "strong-drive"};
  return names;
}

struct ScenarioKeys {
  std::string units;  // "J" or "eV"
  std::set<std::string> required;
  std::map<std::string, std::string> optional;  // key -> default
};

namespace detail {

inline std::map<std::string, std::string> band_defaults() {
  return {{"eps1", "0"},   {"eps21", "3.7"}, {"t1", "0.05"},          {"t2", "-0.15"},
          {"U11", "1.6"},  {"U12", "0.8"},   {"occupation", "full"}, {"kF", "0"}};
}

}  // namespace detail

inline ScenarioKeys scenario_keys(const std::string& scenario) {
  ScenarioKeys k;
  auto merge = [&k](const std::map<std::string, std::string>& m) { k.optional.insert(m.begin(), m.end()); };
  if (scenario == "bench-return-rate") {
    k.units = "J";
    k.required = {"L", "U", "omega", "g", "tf"};
    k.optional = {{"J", "1"},         {"mu", "0"},          {"dt", "0.001"},
                  {"sample_every", "0.1"}, {"include_J2", "1"}, {"hfe_order", "1"}};
  } else if (scenario == "derive-hamiltonian") {
    k.units = "J";
    k.required = {"L", "U", "omega", "g"};
    k.optional = {{"J", "1"}, {"mu", "0"}, {"include_J2", "1"}, {"include_g4", "0"}, {"method", "fswt"}};
  } else if (scenario == "strong-drive") {
    k.units = "J";
    k.required = {"L", "U", "omega", "g"};
    k.optional = {{"J", "1"}, {"jmax", "8"}, {"n_up", "-1"}, {"n_dn", "-1"}};
  } else if (scenario == "kspace-map") {
    k.units = "eV";
    k.required = {"omega"};
    k.optional = {{"N", "64"}, {"dims", "2"}, {"g", "0"}, {"spin", "up"}};
    merge(detail::band_defaults());
  } else if (scenario == "exciton") {
    k.units = "eV";
    k.optional = {{"N", "64"}, {"dims", "2"}, {"spin", "up"}};
    merge(detail::band_defaults());
  } else if (scenario == "gamma-scan") {
    k.units = "eV";
    k.required = {"omega_min", "omega_max", "n_omega"};
    k.optional = {{"N", "8"}, {"dims", "1"}, {"V", "0.8"}, {"kappa", "0"}, {"k", "0"}, {"q", "0"}, {"g", "0.05"}};
    merge(detail::band_defaults());
  } else if (scenario == "absorbance-ed") {
    k.units = "eV";
    k.required = {"omega_min", "omega_max", "n_omega", "gamma"};
    k.optional = {{"L", "3"}};
    merge(detail::band_defaults());
  } else if (scenario == "pomeranchuk") {
    k.units = "eV";
    k.required = {"g", "gc0", "delta_c", "delta_ex"};
    k.optional = {{"N", "64"}, {"dims", "2"}, {"spin", "up"}};
    merge(detail::band_defaults());
    k.optional["occupation"] = "hole";
    k.optional["kF"] = "0.10471975511965977";
  } else {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
  return k;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Flat `key = value` text with `#` comments.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (val.empty()) throw ConfigError("key '" + key + "': empty value");
    if (!kv.emplace(key, val).second) throw ConfigError("key '" + key + "': given twice");
  }
  return kv;
}

class ScenarioConfig {
 public:
  ScenarioConfig(std::string scenario, const std::map<std::string, std::string>& given)
      : scenario_(std::move(scenario)), keys_(scenario_keys(scenario_)) {
    if (given.empty()) throw ConfigError("empty config");
    auto u = given.find("units");
    if (u == given.end()) throw ConfigError("missing required key 'units'");
    if (u->second != keys_.units)
      throw ConfigError("key 'units': scenario " + scenario_ + " expects units = " + keys_.units);
    for (const auto& [k, v] : given) {
      if (k == "units") continue;
      if (!keys_.required.count(k) && !keys_.optional.count(k)) throw ConfigError("unknown key '" + k + "'");
    }
    for (const auto& r : keys_.required)
      if (!given.count(r)) throw ConfigError("missing required key '" + r + "'");
    values_ = keys_.optional;
    for (const auto& [k, v] : given) values_[k] = v;
    values_["units"] = u->second;
  }

  static ScenarioConfig from_file(const std::string& scenario, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ScenarioConfig(scenario, parse_key_values(ss.str()));
  }

  const std::string& scenario() const { return scenario_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const {
    const std::string& s = str(key);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    return v;
  }

  int integer(const std::string& key) const {
    const std::string& s = str(key);
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
  }

  double positive(const std::string& key) const {
    const double v = num(key);
    if (!(v > 0.0)) throw ConfigError("key '" + key + "': must be positive");
    return v;
  }

  int spin(const std::string& key = "spin") const {
    const std::string& s = str(key);
    if (s == "up") return 0;
    if (s == "dn" || s == "down") return 1;
    throw ConfigError("key '" + key + "': expected up or dn");
  }

 private:
  std::string scenario_;
  ScenarioKeys keys_;
  std::map<std::string, std::string> values_;
};

}  // namespace ff
