#pragma once

// The acceptance suite: eight criteria, each with pinned tolerances that can
// be overridden (for instance by the verify command's config section).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace slowfast {

struct AcceptanceSettings {
  std::uint64_t seed = 20240611;
  std::vector<int> criteria;  // empty runs all

  std::size_t decomposition_matrices = 200;
  std::size_t decomposition_states = 8;
  double decomposition_density = 0.25;

  std::size_t absorption_replicas = 100000;
  double absorption_sigmas = 3.0;
  double toy3_expected_q = 0.4;  // q(-e | ++-) from the exact rational solve
  double toy3_q_tolerance = 1e-12;

  double decay_min_r_squared = 0.95;
  std::size_t envelope_steps = 50;

  double navigation_beta = 2.0;
  std::vector<double> gap_deltas{1e-3, 1e-2, 1e-1};
  double gap_max_variation = 0.5;
  double gap_t = 1.0;
  double gap_lambda = 10.0;

  std::size_t weak_replicas = 100000;
  std::vector<double> weak_lambdas{10.0, 1e2, 1e3, 1e4};
  double weak_t = 1.0;
  double slope_threshold = -0.4;
  double dominance_ratio = 0.5;

  double ergodic_p = 0.5;
  double drift_tolerance = 1e-10;

  std::size_t reproducibility_replicas = 20000;

  std::size_t poisson_replicas = 100000;
  double poisson_sigmas = 3.0;

  // Runtime limits in seconds, indexed by criterion number (0 unused).
  std::vector<double> runtime_limits{0.0, 5.0, 30.0, 5.0, 10.0, 600.0, 600.0, 600.0, 60.0};
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // deterministic given the settings
  double seconds = 0.0;
  bool within_runtime = true;
};

struct AcceptanceResult {
  std::vector<CriterionResult> results;
  bool all_passed() const;
};

std::string criterion_name(int id);

AcceptanceResult run_acceptance(const AcceptanceSettings& settings,
                                const std::function<void(const CriterionResult&)>& progress = {});

// Byte-stable text: settings echo and one line per criterion, no timings.
std::string acceptance_report(const AcceptanceResult& result, const AcceptanceSettings& settings);

}  // namespace slowfast
