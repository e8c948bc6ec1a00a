#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace cycleqm {

// Value of one config entry. Arrays are homogeneous (numbers or strings).
struct ConfigValue {
  std::variant<std::string, double, long long, bool, std::vector<double>,
               std::vector<std::string>>
      v;
  int line = 0;

  bool is_number() const {
    return std::holds_alternative<double>(v) || std::holds_alternative<long long>(v);
  }
  double as_double() const;
  long long as_int() const;
  const std::string& as_string() const;
  bool as_bool() const;
  const std::vector<double>& as_array() const;
};

// Flattened "section.key" -> value table parsed from TOML-syntax text.
// Supported subset: comments, [section] headers, key = value with strings,
// integers, floats, booleans, and arrays of numbers or strings.
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_toml_text(const std::string& text);
ConfigTable parse_toml_file(const std::string& path);

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 12345;
  std::string output_dir = "out";
  bool strict = false;
  ConfigTable values;  // validated, defaults filled in

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_array(const std::string& key) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
};

const std::vector<std::string>& valid_experiment_names();

// Validates the raw table against the chosen experiment's schema; throws
// ConfigError listing every unknown key and every violated constraint.
ExperimentConfig validate_config(const ConfigTable& table);

ExperimentConfig parse_config(const std::string& path);

}  // namespace cycleqm
