#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace slowfast_cli {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

const std::vector<std::string>& verify_tolerance_keys() {
  static const std::vector<std::string> keys{
      "absorption_replicas", "absorption_sigmas", "decay_min_r_squared", "gap_max_variation",
      "navigation_beta",     "weak_replicas",     "slope_threshold",     "dominance_ratio",
      "ergodic_p",           "drift_tolerance",   "poisson_replicas",    "poisson_sigmas"};
  return keys;
}

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

void expect_map(const YAML::Node& node, const std::string& what) {
  if (!node.IsMap()) throw ConfigError(line_of(node), what + " must be a mapping");
}

void check_keys(const YAML::Node& node, const std::string& section,
                const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError(line_of(kv.first), "unknown key '" + key + "' in section " + section);
  }
}

double real(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), key + " must be a number");
  const std::string text = node.Scalar();
  if (text == "inf" || text == ".inf" || text == "+.inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-.inf") return -std::numeric_limits<double>::infinity();
  try {
    const double v = node.as<double>();
    if (std::isnan(v)) throw ConfigError(line_of(node), key + " must not be NaN");
    return v;
  } catch (const YAML::BadConversion&) {
    throw ConfigError(line_of(node), key + " must be a number, got '" + text + "'");
  }
}

double finite(const YAML::Node& node, const std::string& key) {
  const double v = real(node, key);
  if (!std::isfinite(v)) throw ConfigError(line_of(node), key + " must be finite");
  return v;
}

double positive(const YAML::Node& node, const std::string& key) {
  const double v = finite(node, key);
  if (!(v > 0.0)) throw ConfigError(line_of(node), key + " must be positive");
  return v;
}

double nonnegative(const YAML::Node& node, const std::string& key) {
  const double v = finite(node, key);
  if (v < 0.0) throw ConfigError(line_of(node), key + " must be nonnegative");
  return v;
}

std::uint64_t unsigned_integer(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), key + " must be a nonnegative integer");
  const std::string text = node.Scalar();
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(line_of(node), key + " must be a nonnegative integer, got '" + text + "'");
  try {
    return node.as<std::uint64_t>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(line_of(node), key + " is out of range");
  }
}

std::string text(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), key + " must be a string");
  return node.Scalar();
}

std::vector<double> real_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError(line_of(node), key + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(finite(item, key));
  return out;
}

std::vector<double> positive_list(const YAML::Node& node, const std::string& key) {
  std::vector<double> out;
  if (!node.IsSequence()) throw ConfigError(line_of(node), key + " must be a list of numbers");
  for (const auto& item : node) out.push_back(positive(item, key));
  if (out.empty()) throw ConfigError(line_of(node), key + " must not be empty");
  return out;
}

std::vector<std::string> text_list(const YAML::Node& node, const std::string& key,
                                   const std::set<std::string>& allowed) {
  if (!node.IsSequence()) throw ConfigError(line_of(node), key + " must be a list");
  std::vector<std::string> out;
  for (const auto& item : node) {
    const std::string value = text(item, key);
    if (!allowed.count(value)) throw ConfigError(line_of(item), "unknown " + key + " '" + value + "'");
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError(line_of(node), key + " must not be empty");
  return out;
}

void parse_model(const YAML::Node& node, RunConfig& config) {
  expect_map(node, "model");
  check_keys(node, "model", {"name", "params"});
  ModelSection model;
  if (!node["name"]) throw ConfigError(line_of(node), "model.name is missing");
  model.name = text(node["name"], "model.name");
  if (model.name.empty()) throw ConfigError(line_of(node["name"]), "model.name is empty");
  if (const auto params = node["params"]) {
    if (params.IsNull()) {
    } else {
      expect_map(params, "model.params");
      for (const auto& kv : params) {
        const std::string key = kv.first.as<std::string>();
        model.params[key] = real(kv.second, "model.params." + key);
      }
    }
  }
  config.model = model;
}

void parse_analysis(const YAML::Node& node, AnalysisSection& a) {
  expect_map(node, "analysis");
  check_keys(node, "analysis", {"x", "grid", "max_steps", "target_z0", "tail_tol"});
  if (node["x"]) a.x = real_list(node["x"], "analysis.x");
  if (const auto grid = node["grid"]) {
    if (!grid.IsSequence() || grid.size() == 0)
      throw ConfigError(line_of(grid), "analysis.grid must be a non-empty list of points");
    for (const auto& p : grid) a.grid.push_back(real_list(p, "analysis.grid point"));
  }
  if (node["max_steps"]) {
    a.max_steps = unsigned_integer(node["max_steps"], "analysis.max_steps");
    if (a.max_steps == 0) throw ConfigError(line_of(node["max_steps"]), "analysis.max_steps must be positive");
  }
  if (node["target_z0"]) a.target_z0 = positive(node["target_z0"], "analysis.target_z0");
  if (node["tail_tol"]) a.tail_tol = positive(node["tail_tol"], "analysis.tail_tol");
}

void parse_simulation(const YAML::Node& node, SimulationSection& s) {
  expect_map(node, "simulation");
  check_keys(node, "simulation",
             {"x0", "v0", "t_end", "lambda", "replicas", "M", "seed", "h", "report_dt",
              "frozen_measure_mode", "processes"});
  if (node["x0"]) s.x0 = real_list(node["x0"], "simulation.x0");
  if (node["v0"]) s.v0 = text(node["v0"], "simulation.v0");
  if (node["t_end"]) s.t_end = positive(node["t_end"], "simulation.t_end");
  if (node["lambda"]) s.lambda = nonnegative(node["lambda"], "simulation.lambda");
  if (node["replicas"]) s.replicas = unsigned_integer(node["replicas"], "simulation.replicas");
  if (node["M"]) s.replicas = unsigned_integer(node["M"], "simulation.M");
  if (node["seed"]) s.seed = unsigned_integer(node["seed"], "simulation.seed");
  if (node["h"]) s.h = nonnegative(node["h"], "simulation.h");
  if (node["report_dt"]) s.report_dt = nonnegative(node["report_dt"], "simulation.report_dt");
  if (node["frozen_measure_mode"]) {
    s.frozen_measure_mode = text(node["frozen_measure_mode"], "simulation.frozen_measure_mode");
    if (s.frozen_measure_mode != "state_dependent" && s.frozen_measure_mode != "anchored_at_x0")
      throw ConfigError(line_of(node["frozen_measure_mode"]),
                        "frozen_measure_mode must be state_dependent or anchored_at_x0");
  }
  if (node["processes"])
    s.processes = text_list(node["processes"], "simulation.processes", {"coupled", "frozen", "averaged"});
  if (s.report_dt > 0.0 && s.h > 0.0) {
    const double ratio = s.report_dt / s.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
      throw ConfigError(line_of(node["h"]), "simulation.h must divide simulation.report_dt");
  }
}

void parse_experiment(const YAML::Node& node, ExperimentSection& e) {
  expect_map(node, "experiment");
  check_keys(node, "experiment",
             {"kinds", "lambda_grid", "observable", "t", "replicas", "M", "dominance_ratio",
              "decay", "gap"});
  if (node["kinds"])
    e.kinds = text_list(node["kinds"], "experiment.kinds", {"weak_error", "decay", "gap"});
  if (node["lambda_grid"]) e.lambda_grid = positive_list(node["lambda_grid"], "experiment.lambda_grid");
  if (const auto obs = node["observable"]) {
    if (obs.IsScalar()) {
      e.observable.kind = obs.Scalar();
    } else {
      expect_map(obs, "experiment.observable");
      check_keys(obs, "experiment.observable", {"kind", "coordinate"});
      if (obs["kind"]) e.observable.kind = text(obs["kind"], "experiment.observable.kind");
      if (obs["coordinate"]) {
        e.observable.coordinate = unsigned_integer(obs["coordinate"], "experiment.observable.coordinate");
        if (e.observable.coordinate == 0)
          throw ConfigError(line_of(obs["coordinate"]), "observable coordinates are 1-based");
      }
    }
    static const std::set<std::string> catalog{"coordinate", "tanh", "bump"};
    if (!catalog.count(e.observable.kind))
      throw ConfigError(line_of(obs), "unknown observable '" + e.observable.kind +
                                          "' (catalog: coordinate, tanh, bump)");
  }
  if (node["t"]) e.t = positive(node["t"], "experiment.t");
  if (node["replicas"]) e.replicas = unsigned_integer(node["replicas"], "experiment.replicas");
  if (node["M"]) e.replicas = unsigned_integer(node["M"], "experiment.M");
  if (node["dominance_ratio"]) e.dominance_ratio = positive(node["dominance_ratio"], "experiment.dominance_ratio");
  if (const auto d = node["decay"]) {
    expect_map(d, "experiment.decay");
    check_keys(d, "experiment.decay", {"t_grid", "lambda_grid", "envelope_steps"});
    if (d["t_grid"]) e.decay_t_grid = positive_list(d["t_grid"], "experiment.decay.t_grid");
    if (d["lambda_grid"]) e.decay_lambda_grid = positive_list(d["lambda_grid"], "experiment.decay.lambda_grid");
    if (d["envelope_steps"]) e.envelope_steps = unsigned_integer(d["envelope_steps"], "experiment.decay.envelope_steps");
  }
  if (const auto g = node["gap"]) {
    expect_map(g, "experiment.gap");
    check_keys(g, "experiment.gap", {"deltas", "t", "lambda", "marginal_lambdas", "marginal_replicas"});
    if (g["deltas"]) {
      e.gap_deltas = real_list(g["deltas"], "experiment.gap.deltas");
      if (e.gap_deltas.empty()) throw ConfigError(line_of(g["deltas"]), "experiment.gap.deltas must not be empty");
      for (double d : e.gap_deltas)
        if (d < 0.0) throw ConfigError(line_of(g["deltas"]), "experiment.gap.deltas must be nonnegative");
    }
    if (g["t"]) e.gap_t = positive(g["t"], "experiment.gap.t");
    if (g["lambda"]) e.gap_lambda = positive(g["lambda"], "experiment.gap.lambda");
    if (g["marginal_lambdas"]) {
      e.gap_marginal_lambdas.clear();
      if (!g["marginal_lambdas"].IsSequence())
        throw ConfigError(line_of(g["marginal_lambdas"]), "experiment.gap.marginal_lambdas must be a list");
      for (const auto& item : g["marginal_lambdas"])
        e.gap_marginal_lambdas.push_back(positive(item, "experiment.gap.marginal_lambdas"));
    }
    if (g["marginal_replicas"]) {
      e.gap_marginal_replicas = unsigned_integer(g["marginal_replicas"], "experiment.gap.marginal_replicas");
      if (e.gap_marginal_replicas == 0)
        throw ConfigError(line_of(g["marginal_replicas"]), "experiment.gap.marginal_replicas must be positive");
    }
  }
}

void parse_output(const YAML::Node& node, OutputSection& o) {
  expect_map(node, "output");
  check_keys(node, "output", {"directory", "formats"});
  if (node["directory"]) {
    o.directory = text(node["directory"], "output.directory");
    if (o.directory.empty()) throw ConfigError(line_of(node["directory"]), "output.directory is empty");
  }
  if (node["formats"]) o.formats = text_list(node["formats"], "output.formats", {"csv", "summary"});
}

void parse_verify(const YAML::Node& node, VerifySection& v) {
  expect_map(node, "verify");
  std::set<std::string> allowed{"seed", "criteria"};
  for (const auto& key : verify_tolerance_keys()) allowed.insert(key);
  check_keys(node, "verify", allowed);
  if (node["seed"]) v.seed = unsigned_integer(node["seed"], "verify.seed");
  if (const auto c = node["criteria"]) {
    if (!c.IsSequence()) throw ConfigError(line_of(c), "verify.criteria must be a list");
    for (const auto& item : c) {
      const auto id = unsigned_integer(item, "verify.criteria");
      if (id < 1 || id > 8) throw ConfigError(line_of(item), "criteria are numbered 1 to 8");
      v.criteria.push_back(static_cast<int>(id));
    }
  }
  for (const auto& key : verify_tolerance_keys())
    if (node[key]) v.tolerances[key] = finite(node[key], "verify." + key);
}

}  // namespace

RunConfig parse_config_text(const std::string& source) {
  RunConfig config;
  config.source_text = source;
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.mark.line + 1, "malformed YAML: " + e.msg);
  }
  if (root.IsNull()) throw ConfigError(0, "configuration is empty");
  try {
    expect_map(root, "configuration");
    check_keys(root, "configuration",
               {"model", "analysis", "simulation", "experiment", "output", "verify"});
    if (root["model"]) parse_model(root["model"], config);
    if (root["analysis"]) parse_analysis(root["analysis"], config.analysis);
    if (root["simulation"]) parse_simulation(root["simulation"], config.simulation);
    if (root["experiment"]) parse_experiment(root["experiment"], config.experiment);
    if (root["output"]) parse_output(root["output"], config.output);
    if (root["verify"]) parse_verify(root["verify"], config.verify);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.mark.line + 1, e.msg);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read configuration file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace slowfast_cli
