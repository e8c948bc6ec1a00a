#include "cycleqm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cycleqm/errors.hpp"

namespace cycleqm {

double ConfigValue::as_double() const {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
  throw ConfigError("config value is not a number (line " + std::to_string(line) + ")");
}

long long ConfigValue::as_int() const {
  if (const auto* i = std::get_if<long long>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::floor(*d) == *d) return static_cast<long long>(*d);
  }
  throw ConfigError("config value is not an integer (line " + std::to_string(line) + ")");
}

const std::string& ConfigValue::as_string() const {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("config value is not a string (line " + std::to_string(line) + ")");
}

bool ConfigValue::as_bool() const {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError("config value is not a boolean (line " + std::to_string(line) + ")");
}

const std::vector<double>& ConfigValue::as_array() const {
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError("config value is not a numeric array (line " + std::to_string(line) + ")");
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_scalar(const std::string& raw, int line) {
  ConfigValue out;
  out.line = line;
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw ConfigError("line " + std::to_string(line) + ": unterminated string");
    out.v = s.substr(1, s.size() - 2);
    return out;
  }
  if (s == "true" || s == "false") {
    out.v = (s == "true");
    return out;
  }
  // Integer first, general float second.
  {
    char* end = nullptr;
    const long long i = std::strtoll(s.c_str(), &end, 10);
    if (end && *end == '\0' && s.find_first_of(".eE") == std::string::npos) {
      out.v = i;
      return out;
    }
  }
  {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') {
      out.v = d;
      return out;
    }
  }
  throw ConfigError("line " + std::to_string(line) + ": cannot parse value '" + s + "'");
}

ConfigValue parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']')
      throw ConfigError("line " + std::to_string(line) + ": unterminated array");
    const std::string body = s.substr(1, s.size() - 2);
    std::vector<std::string> parts;
    std::string cur;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) parts.push_back(cur);
    ConfigValue out;
    out.line = line;
    std::vector<double> nums;
    std::vector<std::string> strs;
    for (const std::string& part : parts) {
      ConfigValue item = parse_scalar(part, line);
      if (item.is_number())
        nums.push_back(item.as_double());
      else if (std::holds_alternative<std::string>(item.v))
        strs.push_back(item.as_string());
      else
        throw ConfigError("line " + std::to_string(line) + ": unsupported array element");
    }
    if (!strs.empty() && !nums.empty())
      throw ConfigError("line " + std::to_string(line) + ": mixed array element types");
    if (!strs.empty())
      out.v = strs;
    else
      out.v = nums;
    return out;
  }
  return parse_scalar(s, line);
}

}  // namespace

ConfigTable parse_toml_text(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" + s +
                        "'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    table[full] = parse_value(s.substr(eq + 1), line_no);
  }
  return table;
}

ConfigTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml_text(buf.str());
}

const std::vector<std::string>& valid_experiment_names() {
  static const std::vector<std::string> names = {
      "two_slit",       "bridge", "src_evolution", "classical_path",
      "momentum_measurement", "coin",   "drift_check",   "convergence_sweep"};
  return names;
}

namespace {

enum class Constraint { None, Positive, NonNegative, AtLeast2, ProbabilityHalf, OpenUnit };

struct KeySpec {
  const char* key;
  char type;  // 'd' double, 'i' integer, 's' string, 'a' numeric array, 'b' bool
  bool required;
  ConfigValue fallback;
  Constraint constraint = Constraint::None;
};

ConfigValue cv(double d) { return ConfigValue{d, 0}; }
ConfigValue cv(long long i) { return ConfigValue{i, 0}; }
ConfigValue cv(const char* s) { return ConfigValue{std::string(s), 0}; }
ConfigValue cv(std::vector<double> a) { return ConfigValue{std::move(a), 0}; }

std::vector<KeySpec> common_keys() {
  return {
      {"experiment", 's', true, {}, Constraint::None},
      {"seed", 'i', false, cv(12345LL), Constraint::NonNegative},
      {"output_dir", 's', false, cv("out"), Constraint::None},
      {"strict", 'b', false, ConfigValue{false, 0}, Constraint::None},
  };
}

std::vector<KeySpec> grid_keys(double x_min, double x_max, long long n) {
  return {
      {"grid.x_min", 'd', false, cv(x_min), Constraint::None},
      {"grid.x_max", 'd', false, cv(x_max), Constraint::None},
      {"grid.n_points", 'i', false, cv(n), Constraint::AtLeast2},
  };
}

std::vector<KeySpec> mesh_keys(double eps, long long n) {
  return {
      {"mesh.epsilon", 'd', false, cv(eps), Constraint::Positive},
      {"mesh.n_steps", 'i', false, cv(n), Constraint::Positive},
  };
}

std::vector<KeySpec> solver_keys() {
  return {
      {"solver.tolerance", 'd', false, cv(1e-10), Constraint::Positive},
      {"solver.max_iterations", 'i', false, cv(10000LL), Constraint::Positive},
  };
}

void append(std::vector<KeySpec>& dst, std::vector<KeySpec> more) {
  for (auto& k : more) dst.push_back(std::move(k));
}

std::vector<KeySpec> schema_for(const std::string& experiment) {
  std::vector<KeySpec> keys = common_keys();
  if (experiment == "two_slit") {
    append(keys, grid_keys(-8.0, 8.0, 257));
    append(keys, {{"physics.mass", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.hbar", 'd', false, cv(1.0), Constraint::Positive},
                  {"two_slit.x_slit", 'd', false, cv(1.0), Constraint::Positive},
                  {"two_slit.tau_source", 'd', false, cv(0.5), Constraint::Positive},
                  {"two_slit.tau_screen", 'd', false, cv(0.5), Constraint::Positive}});
  } else if (experiment == "bridge") {
    append(keys, grid_keys(-5.0, 5.0, 64));
    append(keys, mesh_keys(0.05, 10));
    append(keys, solver_keys());
    append(keys, {{"physics.mass", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.hbar", 'd', false, cv(1.0), Constraint::Positive},
                  {"bridge.p0_center", 'd', false, cv(-1.0), Constraint::None},
                  {"bridge.p0_sigma", 'd', false, cv(0.4), Constraint::Positive},
                  {"bridge.pn_center", 'd', false, cv(1.0), Constraint::None},
                  {"bridge.pn_sigma", 'd', false, cv(0.4), Constraint::Positive}});
  } else if (experiment == "src_evolution" || experiment == "convergence_sweep") {
    append(keys, grid_keys(-6.0, 6.0, 32));
    append(keys, mesh_keys(0.01, 100));
    append(keys, {{"physics.mass", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.hbar", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.lambda", 'd', false, cv(0.0), Constraint::NonNegative},
                  {"physics.drift", 'd', false, cv(0.0), Constraint::None},
                  {"src.model", 's', false, cv("free_particle"), Constraint::None},
                  {"src.total_time", 'd', false, cv(1.0), Constraint::Positive},
                  {"src.oracle_tolerance", 'd', false, cv(1e-3), Constraint::Positive},
                  {"rabi.E0", 'd', false, cv(0.0), Constraint::None},
                  {"rabi.E1", 'd', false, cv(1.0), Constraint::None},
                  {"rabi.omega", 'd', false, cv(1.0), Constraint::Positive},
                  {"rabi.dipole", 'd', false, cv(0.2), Constraint::None}});
  } else if (experiment == "classical_path") {
    append(keys, mesh_keys(0.05, 32));
    append(keys, {{"physics.mass", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.potential", 's', false, cv("harmonic"), Constraint::None},
                  {"physics.kappa", 'd', false, cv(1.0), Constraint::NonNegative},
                  {"path.x_start", 'd', false, cv(0.0), Constraint::None},
                  {"path.x_end", 'd', false, cv(1.0), Constraint::None},
                  {"solver.tolerance", 'd', false, cv(1e-12), Constraint::Positive},
                  {"solver.max_iterations", 'i', false, cv(200LL), Constraint::Positive}});
  } else if (experiment == "momentum_measurement") {
    append(keys, grid_keys(-4.0, 4.0, 2048));
    append(keys,
           {{"pointer.sigma", 'd', false, cv(0.025), Constraint::Positive},
            {"pointer.g", 'd', false, cv(1.0), Constraint::None},
            {"pointer.tau", 'd', false, cv(1.0), Constraint::Positive},
            {"pointer.hbar", 'd', false, cv(1.0), Constraint::Positive},
            {"pointer.k_values", 'a', false, cv(std::vector<double>{-2, -1, 0, 1, 2}),
             Constraint::None},
            {"pointer.weights", 'a', false, cv(std::vector<double>{0.1, 0.2, 0.4, 0.2, 0.1}),
             Constraint::None},
            {"pointer.coupling_a", 'd', false, cv(0.5), Constraint::OpenUnit},
            {"pointer.system_mass", 'd', false, cv(1.0), Constraint::Positive},
            {"pointer.device_mass", 'd', false, cv(1.0), Constraint::Positive},
            {"pointer.kernel_epsilon", 'd', false, cv(0.01), Constraint::Positive}});
  } else if (experiment == "coin") {
    append(keys, {{"coin.p", 'd', false, cv(0.3), Constraint::ProbabilityHalf},
                  {"coin.n_samples", 'i', false, cv(100000LL), Constraint::NonNegative}});
  } else if (experiment == "drift_check") {
    append(keys, grid_keys(-6.0, 6.0, 257));
    append(keys, {{"mesh.epsilon", 'd', false, cv(0.01), Constraint::Positive},
                  {"mesh.n_steps", 'i', false, cv(10LL), Constraint::Positive},
                  {"physics.gamma", 'd', false, cv(1.0), Constraint::Positive},
                  {"physics.drift", 'd', false, cv(0.5), Constraint::None},
                  {"physics.h_diff", 'd', false, cv(1.0), Constraint::Positive}});
  }
  return keys;
}

std::string check_constraint(const KeySpec& spec, const ConfigValue& value) {
  const std::string name(spec.key);
  try {
    switch (spec.type) {
      case 'd':
      case 'i': {
        const double d = spec.type == 'i' ? static_cast<double>(value.as_int())
                                          : value.as_double();
        switch (spec.constraint) {
          case Constraint::Positive:
            if (!(d > 0.0)) return name + " must be positive (got " + std::to_string(d) + ")";
            break;
          case Constraint::NonNegative:
            if (d < 0.0) return name + " must be non-negative (got " + std::to_string(d) + ")";
            break;
          case Constraint::AtLeast2:
            if (d < 2.0) return name + " must be >= 2 (got " + std::to_string(d) + ")";
            break;
          case Constraint::ProbabilityHalf:
            if (d < 0.0 || d > 0.5)
              return name + " must lie in [0, 0.5] (got " + std::to_string(d) + ")";
            break;
          case Constraint::OpenUnit:
            if (!(std::abs(d) < 1.0))
              return name + " must satisfy |value| < 1 (got " + std::to_string(d) + ")";
            break;
          case Constraint::None:
            break;
        }
        break;
      }
      case 's':
        (void)value.as_string();
        break;
      case 'a':
        (void)value.as_array();
        break;
      case 'b':
        (void)value.as_bool();
        break;
      default:
        break;
    }
  } catch (const ConfigError& e) {
    return name + ": " + e.what();
  }
  return "";
}

}  // namespace

double ExperimentConfig::get_double(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key: " + key);
  return it->second.as_double();
}

long long ExperimentConfig::get_int(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key: " + key);
  return it->second.as_int();
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key: " + key);
  return it->second.as_string();
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key: " + key);
  return it->second.as_bool();
}

std::vector<double> ExperimentConfig::get_array(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key: " + key);
  return it->second.as_array();
}

ExperimentConfig validate_config(const ConfigTable& table) {
  auto exp_it = table.find("experiment");
  if (exp_it == table.end()) throw ConfigError("config is missing the 'experiment' key");
  std::string experiment;
  try {
    experiment = exp_it->second.as_string();
  } catch (const ConfigError&) {
    throw ConfigError("'experiment' must be a string");
  }
  const auto& names = valid_experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    std::string msg = "unknown experiment '" + experiment + "'; valid names:";
    for (const auto& n : names) msg += " " + n;
    throw ConfigError(msg);
  }

  const std::vector<KeySpec> schema = schema_for(experiment);
  std::vector<std::string> problems;

  for (const auto& [key, value] : table) {
    const bool known = std::any_of(schema.begin(), schema.end(),
                                   [&](const KeySpec& s) { return key == s.key; });
    if (!known)
      problems.push_back("unknown key '" + key + "' (line " + std::to_string(value.line) + ")");
  }

  ExperimentConfig cfg;
  cfg.experiment = experiment;
  for (const KeySpec& spec : schema) {
    auto it = table.find(spec.key);
    if (it == table.end()) {
      if (spec.required && std::string(spec.key) != "experiment")
        problems.push_back(std::string("missing required key '") + spec.key + "'");
      else
        cfg.values[spec.key] = spec.fallback;
      continue;
    }
    const std::string err = check_constraint(spec, it->second);
    if (!err.empty())
      problems.push_back(err + " (line " + std::to_string(it->second.line) + ")");
    cfg.values[spec.key] = it->second;
  }
  cfg.values["experiment"] = ConfigValue{experiment, exp_it->second.line};

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  cfg.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  cfg.output_dir = cfg.get_string("output_dir");
  cfg.strict = cfg.get_bool("strict");
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  return validate_config(parse_toml_file(path));
}

}  // namespace cycleqm
