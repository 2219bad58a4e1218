#pragma once

// Run configuration of the command-line tool, read from a YAML file.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slowfast_cli {

// Validation failure; line is 1-based, 0 when no position applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ModelSection {
  std::string name;
  std::map<std::string, double> params;
};

struct AnalysisSection {
  std::optional<std::vector<double>> x;  // defaults to simulation.x0
  std::vector<std::vector<double>> grid;  // defaults to {x}
  std::size_t max_steps = 100;
  double target_z0 = 1.0;
  double tail_tol = 1e-12;
};

struct SimulationSection {
  std::optional<std::vector<double>> x0;  // defaults to the origin
  std::string v0;                         // label; empty selects state 0
  double t_end = 1.0;
  std::optional<double> lambda;
  std::size_t replicas = 0;  // Monte Carlo replicas of the observable, 0 skips
  std::uint64_t seed = 1;
  double h = 0.0;
  double report_dt = 0.0;
  std::string frozen_measure_mode = "state_dependent";
  std::vector<std::string> processes{"coupled"};
};

struct ObservableSpec {
  std::string kind = "tanh";
  std::size_t coordinate = 1;  // 1-based
};

struct ExperimentSection {
  std::vector<std::string> kinds{"weak_error"};
  std::vector<double> lambda_grid{10.0, 1e2, 1e3, 1e4};
  ObservableSpec observable;
  double t = 1.0;
  std::size_t replicas = 100000;
  double dominance_ratio = 0.5;
  std::vector<double> decay_t_grid;        // empty selects 1..20
  std::vector<double> decay_lambda_grid{1.0};
  std::size_t envelope_steps = 50;
  std::vector<double> gap_deltas{1e-3, 1e-2, 1e-1};
  double gap_t = 1.0;
  double gap_lambda = 10.0;
  std::vector<double> gap_marginal_lambdas{1e2, 1e3, 1e4};
  std::size_t gap_marginal_replicas = 10000;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "summary"};
};

// Overrides of the acceptance settings; unset values keep the defaults.
struct VerifySection {
  std::optional<std::uint64_t> seed;
  std::vector<int> criteria;
  std::map<std::string, double> tolerances;
};

struct RunConfig {
  std::optional<ModelSection> model;
  AnalysisSection analysis;
  SimulationSection simulation;
  ExperimentSection experiment;
  OutputSection output;
  VerifySection verify;
  std::string source_text;  // the file as read, echoed into outputs
};

// Parses and validates ranges. Throws ConfigError.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Keys accepted in the verify.tolerances section.
const std::vector<std::string>& verify_tolerance_keys();

}  // namespace slowfast_cli
