#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cycleqm/config.hpp"

namespace cycleqm {

inline constexpr const char* kVersion = "0.1.0";

struct InvariantCheck {
  std::string name;
  std::string comparison;  // "<=" or ">"
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RunReport {
  std::string experiment;
  std::string status = "pass";  // pass | fail | error
  std::string failure_cause;
  double wall_time_s = 0.0;
  std::vector<InvariantCheck> invariants;
  std::vector<std::string> artifacts;
  std::optional<double> sweep_metric;  // residual a sweep can fit a slope on
  nlohmann::json extra;
  nlohmann::json config_echo;

  bool all_pass() const;
};

// Creates <output_dir>/<experiment>/<timestamp>-<seed>/ (timestamps stay out
// of file contents so artifacts remain byte-reproducible).
std::string make_run_dir(const ExperimentConfig& cfg);

// Dispatches to the configured experiment, writes CSV artifacts and
// report.json into run_dir, and returns the report. Module errors are
// captured in the report (status "error") rather than escaping.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& run_dir);

struct SweepReport {
  std::string parameter;
  std::vector<double> values;
  std::vector<RunReport> runs;
  std::optional<double> fitted_slope;  // log-log slope of sweep_metric vs value
  std::optional<bool> monotone_convergence;
  bool all_pass = false;
};

const std::vector<std::string>& sweepable_parameters();

SweepReport sweep(const ExperimentConfig& cfg, const std::string& parameter,
                  const std::vector<double>& values, const std::string& sweep_dir);

void write_report_json(const std::string& run_dir, const RunReport& report);
void write_sweep_report_json(const std::string& sweep_dir, const SweepReport& report);

}  // namespace cycleqm
