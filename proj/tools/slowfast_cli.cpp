// Command-line front end: analyze, simulate, converge and verify.
//
// Exit codes: 0 success, 1 other failure, 2 validation error,
// 3 assumption violation, 4 acceptance failure.

#include <CLI11.hpp>

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "slowfast/slowfast.h"

using slowfast_cli::ConfigError;
using slowfast_cli::RunConfig;

namespace {

constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kValidation = 2;
constexpr int kAssumption = 3;
constexpr int kAcceptance = 4;

int exit_code(sf_status status) {
  switch (status) {
    case SF_OK: return kOk;
    case SF_ERR_INVALID_ARGUMENT:
    case SF_ERR_DIMENSION_MISMATCH:
    case SF_ERR_SEQUENCE_TOO_SHORT:
    case SF_ERR_TRUNCATION_INSUFFICIENT:
    case SF_ERR_RESOURCE_LIMIT: return kValidation;
    case SF_ERR_SINGULAR_SYSTEM:
    case SF_ERR_NOT_IRREDUCIBLE:
    case SF_ERR_ANCHOR_MISMATCH:
    case SF_ERR_CLASS_STRUCTURE_VARIES:
    case SF_ERR_NO_ABSORPTION_BOUND:
    case SF_ERR_BALL_VIOLATION:
    case SF_ERR_CLASS_MISSING: return kAssumption;
    default: return kOther;
  }
}

// Carries a library failure up to main.
struct Failure {
  sf_status status;
  std::string message;
};

void check(sf_status status) {
  if (status != SF_OK) throw Failure{status, sf_last_error()};
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buffer[40];
  const auto end = std::to_chars(buffer, buffer + sizeof(buffer), v).ptr;
  return std::string(buffer, end);
}

std::string point_text(const std::vector<double>& x) {
  std::string out = "[";
  for (std::size_t k = 0; k < x.size(); ++k) out += (k ? ", " : "") + num(x[k]);
  return out + "]";
}

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Model = Handle<sf_model, sf_model_destroy>;
using Analysis = Handle<sf_analysis, sf_analysis_destroy>;
using Trajectory = Handle<sf_trajectory, sf_trajectory_destroy>;
using Report = Handle<sf_report, sf_report_destroy>;

class Run {
 public:
  Run(RunConfig config, std::string command, std::optional<std::uint64_t> seed_override)
      : config_(std::move(config)), command_(std::move(command)), seed_override_(seed_override) {}

  int analyze();
  int simulate();
  int converge();
  int verify();

 private:
  void build_model();
  std::vector<double> start_point() const;
  std::size_t start_state() const;
  std::string provenance() const;
  bool wants(const std::string& format) const;
  std::string path(const std::string& file) const;
  void write(const std::string& file, const std::string& contents) const;
  void write_report(const sf_report* report, const std::string& stem) const;
  std::string label(std::size_t v) const { return sf_model_state_label(model_.get(), v); }

  RunConfig config_;
  std::string command_;
  std::optional<std::uint64_t> seed_override_;
  Model model_;
};

void Run::build_model() {
  if (!config_.model) throw ConfigError(0, "model section with a model name is required");
  const auto& m = *config_.model;
  std::vector<std::string> keys;
  std::vector<const char*> key_ptrs;
  std::vector<double> values;
  for (const auto& [k, v] : m.params) {
    keys.push_back(k);
    values.push_back(v);
  }
  for (const auto& k : keys) key_ptrs.push_back(k.c_str());
  Model base;
  check(sf_model_create(m.name.c_str(), key_ptrs.data(), values.data(), keys.size(), base.out()));
  if (config_.simulation.lambda) {
    check(sf_model_with_lambda(base.get(), *config_.simulation.lambda, model_.out()));
  } else {
    std::swap(base.ptr, model_.ptr);
  }
}

std::vector<double> Run::start_point() const {
  const std::size_t dim = sf_model_dim(model_.get());
  if (!config_.simulation.x0) return std::vector<double>(dim, 0.0);
  const auto& x0 = *config_.simulation.x0;
  if (x0.size() != dim)
    throw ConfigError(0, "simulation.x0 has " + std::to_string(x0.size()) +
                             " coordinates, the model has N = " + std::to_string(dim));
  return x0;
}

std::size_t Run::start_state() const {
  if (config_.simulation.v0.empty()) return 0;
  std::size_t v = 0;
  if (sf_model_state_index(model_.get(), config_.simulation.v0.c_str(), &v) != SF_OK)
    throw ConfigError(0, "simulation.v0 '" + config_.simulation.v0 + "' is not a state of the model");
  return v;
}

std::string Run::provenance() const {
  std::ostringstream out;
  out << "slowfast " << sf_version() << " command=" << command_ << '\n';
  if (model_.get()) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016" PRIx64, sf_model_hash(model_.get()));
    out << "model = " << sf_model_description(model_.get()) << '\n';
    out << "model_hash = " << hash << '\n';
  }
  if (seed_override_) out << "seed_override = " << *seed_override_ << '\n';
  out << "config:\n" << config_.source_text;
  return out.str();
}

bool Run::wants(const std::string& format) const {
  for (const auto& f : config_.output.formats)
    if (f == format) return true;
  return false;
}

std::string Run::path(const std::string& file) const {
  return config_.output.directory + "/" + file;
}

void Run::write(const std::string& file, const std::string& contents) const {
  std::string body;
  std::istringstream lines(provenance());
  std::string line;
  while (std::getline(lines, line)) body += "# " + line + '\n';
  body += contents;
  check(sf_write_file(path(file).c_str(), body.c_str()));
}

void Run::write_report(const sf_report* report, const std::string& stem) const {
  const std::string csv = wants("csv") ? path(stem + ".csv") : std::string();
  const std::string summary = wants("summary") ? path(stem + "_summary.txt") : std::string();
  check(sf_report_write(report, csv.empty() ? nullptr : csv.c_str(),
                        summary.empty() ? nullptr : summary.c_str(), provenance().c_str()));
}

int Run::analyze() {
  build_model();
  const std::size_t dim = sf_model_dim(model_.get());
  const std::size_t n = sf_model_state_count(model_.get());
  std::vector<double> x = config_.analysis.x ? *config_.analysis.x : start_point();
  if (x.size() != dim) throw ConfigError(0, "analysis.x has the wrong dimension");
  const std::size_t v0 = start_state();

  Analysis analysis;
  check(sf_analyze(model_.get(), x.data(), analysis.out()));
  const std::size_t classes = sf_analysis_class_count(analysis.get());
  std::vector<std::size_t> transient(sf_analysis_transient_count(analysis.get()));
  check(sf_analysis_transient(analysis.get(), transient.data()));

  std::ostringstream summary;
  summary << "x = " << point_text(x) << '\n';
  summary << "class_count = " << classes << '\n';
  summary << "transient_count = " << transient.size() << '\n';
  std::ostringstream absorption, stationary, limit;
  absorption << "v_label";
  for (std::size_t i = 0; i < classes; ++i) absorption << ",q_" << i + 1;
  absorption << '\n';
  stationary << "class,v_label,weight\n";
  for (std::size_t i = 0; i < classes; ++i) {
    std::vector<std::size_t> members(sf_analysis_class_size(analysis.get(), i));
    std::vector<double> weights(members.size());
    check(sf_analysis_class_members(analysis.get(), i, members.data()));
    check(sf_analysis_stationary(analysis.get(), i, weights.data()));
    summary << "class_" << i + 1 << " = {";
    for (std::size_t k = 0; k < members.size(); ++k) {
      summary << (k ? ", " : "") << label(members[k]);
      stationary << i + 1 << ',' << label(members[k]) << ',' << num(weights[k]) << '\n';
    }
    summary << "}\n";
  }
  summary << "transient = {";
  for (std::size_t k = 0; k < transient.size(); ++k) summary << (k ? ", " : "") << label(transient[k]);
  summary << "}\n";
  for (std::size_t v = 0; v < n; ++v) {
    absorption << label(v);
    for (std::size_t i = 0; i < classes; ++i) {
      double q = 0.0;
      check(sf_analysis_absorption(analysis.get(), v, i, &q));
      absorption << ',' << num(q);
    }
    absorption << '\n';
  }
  std::vector<double> law(n);
  check(sf_analysis_limit_law(analysis.get(), v0, law.data()));
  limit << "v_label,mass\n";
  for (std::size_t v = 0; v < n; ++v) limit << label(v) << ',' << num(law[v]) << '\n';
  summary << "limit_law_from = " << label(v0) << '\n';

  if (wants("summary")) write("decomposition.txt", summary.str());
  if (wants("csv")) {
    write("absorption.csv", absorption.str());
    write("stationary.csv", stationary.str());
    write("limit_law.csv", limit.str());
  }

  std::vector<std::vector<double>> grid = config_.analysis.grid;
  if (grid.empty()) grid.push_back(x);
  std::vector<double> flat;
  for (const auto& p : grid) {
    if (p.size() != dim) throw ConfigError(0, "analysis.grid point has the wrong dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  sf_certificate cert{};
  check(sf_certify(model_.get(), flat.data(), grid.size(), config_.analysis.max_steps,
                   config_.analysis.target_z0, &cert));
  std::ostringstream c;
  c << "n_tilde = " << cert.n_tilde << '\n';
  c << "z0 = " << num(cert.z0) << '\n';
  c << "lipschitz_estimate = " << num(cert.lipschitz_estimate) << '\n';
  c << "lipschitz_declared = " << num(cert.lipschitz_declared) << '\n';
  c << "classes_stable = " << (cert.classes_stable ? "true" : "false") << '\n';
  c << "class_count = " << cert.class_count << '\n';
  c << "transient_count = " << cert.transient_count << '\n';
  c << "grid_points = " << grid.size() << '\n';
  if (wants("summary")) write("certificate.txt", c.str());
  std::cout << "analysis: L=" << classes << " |T|=" << transient.size() << " n_tilde=" << cert.n_tilde
            << " z0=" << num(cert.z0) << " -> " << config_.output.directory << '\n';
  return kOk;
}

int Run::simulate() {
  build_model();
  const auto& s = config_.simulation;
  const std::vector<double> x0 = start_point();
  const std::size_t v0 = start_state();
  const std::uint64_t seed = seed_override_.value_or(s.seed);
  sf_sim_options options = sf_sim_options_default();
  options.h = s.h;
  options.report_dt = s.report_dt;

  std::ostringstream summary;
  summary << "rate = " << num(sf_model_rate(model_.get())) << '\n';
  summary << "t_end = " << num(s.t_end) << '\n';
  summary << "seed = " << seed << '\n';
  const std::size_t dim = sf_model_dim(model_.get());
  for (const auto& process : s.processes) {
    Trajectory traj;
    if (process == "coupled") {
      check(sf_simulate_coupled(model_.get(), x0.data(), v0, s.t_end, seed, &options, traj.out()));
    } else if (process == "frozen") {
      check(sf_simulate_frozen(model_.get(), x0.data(), v0, s.t_end, seed, &options, traj.out()));
    } else {
      const auto mode = s.frozen_measure_mode == "anchored_at_x0" ? SF_ANCHORED_AT_X0 : SF_STATE_DEPENDENT;
      std::size_t zeta = 0;
      check(sf_simulate_averaged(model_.get(), x0.data(), v0, s.t_end, seed, mode, &options, &zeta,
                                 traj.out()));
      summary << "averaged.zeta = " << zeta + 1 << '\n';
      summary << "averaged.frozen_measure_mode = " << s.frozen_measure_mode << '\n';
    }
    const std::size_t rows = sf_trajectory_length(traj.get());
    const std::size_t jumps = sf_trajectory_jump_count(traj.get());
    summary << process << ".rows = " << rows << '\n';
    if (process != "averaged") {
      const double expected = sf_model_rate(model_.get()) * s.t_end;
      summary << process << ".jump_count = " << jumps << '\n';
      summary << process << ".expected_jumps = " << num(expected) << '\n';
      if (expected > 0.0)
        summary << process << ".jump_count_z = " << num((jumps - expected) / std::sqrt(expected)) << '\n';
    }
    if (sf_trajectory_has_slow(traj.get())) {
      std::vector<double> x(dim);
      check(sf_trajectory_slow_state(traj.get(), rows - 1, x.data()));
      summary << process << ".final_x = " << point_text(x) << '\n';
    }
    summary << process << ".final_v = " << label(sf_trajectory_fast_state(traj.get(), rows - 1)) << '\n';
    if (wants("csv")) {
      const std::string file = path("trajectory_" + process + ".csv");
      check(sf_trajectory_write_csv(traj.get(), model_.get(), file.c_str(), provenance().c_str()));
    }
  }
  if (s.replicas > 0) {
    const auto& obs = config_.experiment.observable;
    if (obs.coordinate > dim) throw ConfigError(0, "observable coordinate exceeds N");
    double mean = 0.0, variance = 0.0;
    check(sf_monte_carlo(model_.get(), x0.data(), v0, s.t_end, obs.kind.c_str(), obs.coordinate - 1,
                         s.replicas, seed, s.h, &mean, &variance));
    summary << "monte_carlo.observable = " << obs.kind << '[' << obs.coordinate << "]\n";
    summary << "monte_carlo.replicas = " << s.replicas << '\n';
    summary << "monte_carlo.mean = " << num(mean) << '\n';
    summary << "monte_carlo.variance = " << num(variance) << '\n';
    summary << "monte_carlo.standard_error = " << num(std::sqrt(variance / s.replicas)) << '\n';
  }
  if (wants("summary")) write("simulate_summary.txt", summary.str());
  std::cout << "simulate: " << s.processes.size() << " process(es) -> " << config_.output.directory << '\n';
  return kOk;
}

int Run::converge() {
  build_model();
  const auto& e = config_.experiment;
  const std::vector<double> x0 = start_point();
  const std::size_t v0 = start_state();
  const std::uint64_t seed = seed_override_.value_or(config_.simulation.seed);
  for (const auto& kind : e.kinds) {
    if (kind == "weak_error") {
      if (e.observable.coordinate > x0.size()) throw ConfigError(0, "observable coordinate exceeds N");
      sf_weak_error_options o = sf_weak_error_options_default();
      o.x0 = x0.data();
      o.v0 = v0;
      o.t = e.t;
      o.lambdas = e.lambda_grid.data();
      o.lambda_count = e.lambda_grid.size();
      o.replicas = e.replicas;
      o.seed = seed;
      o.h = config_.simulation.h;
      o.mode = config_.simulation.frozen_measure_mode == "anchored_at_x0" ? SF_ANCHORED_AT_X0
                                                                           : SF_STATE_DEPENDENT;
      o.observable = e.observable.kind.c_str();
      o.coordinate = e.observable.coordinate - 1;
      o.dominance_ratio = e.dominance_ratio;
      Report report;
      check(sf_weak_error(model_.get(), &o, report.out()));
      write_report(report.get(), "weak_error");
      const char* slope = sf_report_summary_value(report.get(), "fitted_slope");
      const char* dominated = sf_report_summary_value(report.get(), "mc_error_dominates");
      std::cout << "weak_error: fitted_slope=" << (slope ? slope : "?") << '\n';
      if (dominated && std::string(dominated) == "true")
        std::cerr << "warning: MCErrorDominates: the confidence half-width exceeds "
                  << num(e.dominance_ratio * 100) << "% of the error at some lambda\n";
    } else if (kind == "decay") {
      sf_decay_options o = sf_decay_options_default();
      o.x = x0.data();
      o.v0 = v0;
      o.times = e.decay_t_grid.empty() ? nullptr : e.decay_t_grid.data();
      o.time_count = e.decay_t_grid.size();
      o.lambdas = e.decay_lambda_grid.data();
      o.lambda_count = e.decay_lambda_grid.size();
      o.tail_tol = config_.analysis.tail_tol;
      o.envelope_steps = e.envelope_steps;
      o.max_steps = config_.analysis.max_steps;
      o.target_z0 = config_.analysis.target_z0;
      Report decay, envelope;
      check(sf_fast_decay(model_.get(), &o, decay.out(), envelope.out()));
      write_report(decay.get(), "decay");
      write_report(envelope.get(), "decay_envelope");
      const char* c1 = sf_report_summary_value(decay.get(), "c1_hat");
      std::cout << "decay: c1_hat=" << (c1 ? c1 : "?") << '\n';
    } else {
      sf_gap_options o = sf_gap_options_default();
      o.x0 = x0.data();
      o.v0 = v0;
      o.deltas = e.gap_deltas.data();
      o.delta_count = e.gap_deltas.size();
      o.t = e.gap_t;
      o.lambda = e.gap_lambda;
      o.marginal_lambdas = e.gap_marginal_lambdas.data();
      o.marginal_count = e.gap_marginal_lambdas.size();
      o.marginal_replicas = e.gap_marginal_replicas;
      o.seed = seed;
      Report report;
      check(sf_sequence_gap(model_.get(), &o, report.out()));
      write_report(report.get(), "sequence_gap");
      const char* variation = sf_report_summary_value(report.get(), "ratio_variation");
      std::cout << "sequence_gap: ratio_variation=" << (variation ? variation : "?") << '\n';
    }
  }
  return kOk;
}

void print_progress(int id, const char* name, int passed, const char* detail, double seconds, void*) {
  std::printf("criterion %d (%s): %s [%.1fs] %s\n", id, name, passed ? "PASS" : "FAIL", seconds, detail);
  std::fflush(stdout);
}

int Run::verify() {
  sf_verify_options o = sf_verify_options_default();
  const auto& v = config_.verify;
  if (v.seed) o.seed = *v.seed;
  if (seed_override_) o.seed = *seed_override_;
  o.criteria = v.criteria.empty() ? nullptr : v.criteria.data();
  o.criteria_count = v.criteria.size();
  const auto count = [](double value, const std::string& key) {
    if (value < 1.0 || std::floor(value) != value)
      throw ConfigError(0, "verify." + key + " must be a positive integer");
    return static_cast<std::size_t>(value);
  };
  for (const auto& [key, value] : v.tolerances) {
    if (key == "absorption_replicas") o.absorption_replicas = count(value, key);
    else if (key == "absorption_sigmas") o.absorption_sigmas = value;
    else if (key == "decay_min_r_squared") o.decay_min_r_squared = value;
    else if (key == "gap_max_variation") o.gap_max_variation = value;
    else if (key == "navigation_beta") o.navigation_beta = value;
    else if (key == "weak_replicas") o.weak_replicas = count(value, key);
    else if (key == "slope_threshold") o.slope_threshold = value;
    else if (key == "dominance_ratio") o.dominance_ratio = value;
    else if (key == "ergodic_p") o.ergodic_p = value;
    else if (key == "drift_tolerance") o.drift_tolerance = value;
    else if (key == "poisson_replicas") o.poisson_replicas = count(value, key);
    else if (key == "poisson_sigmas") o.poisson_sigmas = value;
  }
  int passed = 0;
  const std::string report = path("acceptance_report.txt");
  check(sf_verify(&o, report.c_str(), provenance().c_str(), print_progress, nullptr, &passed));
  std::cout << "verify: " << (passed ? "all criteria passed" : "acceptance FAILED") << " -> " << report
            << '\n';
  return passed ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow-fast averaging toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string command;
  for (const char* name : {"analyze", "simulate", "converge", "verify"}) {
    static const char* help[] = {"decomposition, absorption, stationary laws, certificate",
                                 "trajectories of the coupled, frozen or averaged process",
                                 "weak-error, decay and sequence-gap experiments",
                                 "run the acceptance suite"};
    const std::string n = name;
    const int index = n == "analyze" ? 0 : n == "simulate" ? 1 : n == "converge" ? 2 : 3;
    auto* sub = app.add_subcommand(n, help[index]);
    sub->add_option("--config", config_path, "YAML run configuration")->required(n != "verify");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out_dir, "override the output directory");
    sub->callback([&command, n] { command = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    RunConfig config = config_path.empty() ? slowfast_cli::parse_config_text("{}")
                                            : slowfast_cli::load_config(config_path);
    if (!out_dir.empty()) config.output.directory = out_dir;
    Run run(std::move(config), command, seed);
    if (command == "analyze") return run.analyze();
    if (command == "simulate") return run.simulate();
    if (command == "converge") return run.converge();
    return run.verify();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const Failure& f) {
    std::cerr << "error (" << sf_status_name(f.status) << "): " << f.message << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
