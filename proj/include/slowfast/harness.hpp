#pragma once

// Experiment drivers: weak error of the averaged approximation, exponential
// decay of the frozen fast law, the frozen versus sequence-driven gap and a
// Poissonization consistency check. Every driver returns a TableReport with
// provenance-ready summary entries.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "slowfast/report.hpp"
#include "slowfast/simulation.hpp"

namespace slowfast {

struct Observable {
  std::string name;
  std::function<double(std::span<const double>)> f;
};

// Catalog: "coordinate" (x_j), "tanh" (tanh x_j), "bump" (exp(-|x|^2 / 2)).
// coordinate is a 0-based index and is ignored by "bump".
Observable make_observable(const std::string& kind, std::size_t coordinate = 0);
std::vector<std::string> observable_catalog();

inline constexpr double kZ95 = 1.959963984540054;

struct WeakErrorOptions {
  Point x0;
  StateIndex v0 = 0;
  double t = 1.0;
  std::vector<double> lambda_grid{10.0, 1e2, 1e3, 1e4};
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
  double h = 0.0;
  FrozenMeasureMode mode = FrozenMeasureMode::StateDependent;
  double dominance_ratio = 0.5;  // CI half-width / error above which MC noise dominates
};

struct WeakErrorRow {
  double lambda = 0.0;
  double coupled_mean = 0.0;
  double coupled_halfwidth = 0.0;
  double averaged_expectation = 0.0;  // exact branch enumeration
  double plain_error = 0.0;           // |coupled_mean - averaged_expectation|
  double error = 0.0;                 // paired estimate, see weak_error_experiment
  double error_halfwidth = 0.0;
  bool mc_dominates = false;
};

struct WeakErrorReport {
  std::string observable;
  double t = 0.0;
  std::size_t replicas = 0;
  std::vector<WeakErrorRow> rows;
  std::vector<double> branch_values;       // f(y_i(t)) per class
  std::vector<double> branch_probabilities;  // q_i(x0, v0)
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t slope_points = 0;
  bool any_mc_dominates = false;

  // Consecutive errors decrease, or their confidence intervals overlap.
  bool decreasing_up_to_overlap() const;
  TableReport table() const;
};

// For each lambda runs M coupled replicas. The averaged side is the exact
// enumeration sum_i q_i(x0, v0) f(y_i(t)). The error is estimated from the
// paired differences f(X_t) - f(y_zeta(t)), zeta being the class reached by a
// frozen chain at x0 sharing the replica's uniforms; zeta ~ q(x0, v0)
// exactly, so the pairing is unbiased and removes the branch variance.
// The slope is the least-squares fit of log error on log lambda over rows
// where MC noise does not dominate.
WeakErrorReport weak_error_experiment(const SlowFastModel& model, const Observable& observable,
                                      const WeakErrorOptions& options);

struct FastDecayOptions {
  Point x;
  StateIndex v0 = 0;
  std::vector<double> t_grid;       // default 1..20 with lambda 1
  std::vector<double> lambda_grid{1.0};
  double tail_tol = 1e-12;
  double fit_floor = 1e-9;          // TV values below are excluded from the fit
  std::size_t envelope_steps = 50;
  CertifyOptions certify{};
};

struct DecayReport {
  std::vector<double> lambdas, times, tv, unabsorbed;
  double c1_hat = std::numeric_limits<double>::quiet_NaN();
  double k_hat = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  std::size_t fit_points = 0;
  AbsorptionBound bound;
  std::vector<double> envelope_mass;   // worst-case unabsorbed mass after k jumps
  std::vector<double> envelope_bound;  // z0^floor(k / n_tilde)
  bool envelope_holds = true;

  TableReport table() const;
  TableReport envelope_table() const;
};

// Exact TV distance between the Poissonized frozen law at (t, lambda) and the
// limit law, fitted as log TV = log K - c1 lambda t.
DecayReport fast_decay_experiment(const SlowFastModel& model, const FastDecayOptions& options);

struct SequenceGapOptions {
  Point x0;
  StateIndex v0 = 0;
  std::vector<double> deltas{1e-3, 1e-2, 1e-1};
  double t = 1.0;
  double lambda = 10.0;
  Point direction;  // 1-norm 1; empty selects (1/N, ..., 1/N)
  double tail_tol = 1e-12;
  CertifyOptions certify{};
  // Coupled-marginal diagnostic at t0 = lambda^(-1/2).
  std::vector<double> marginal_lambdas{1e2, 1e3, 1e4};
  std::size_t marginal_replicas = 10000;
  std::uint64_t seed = 1;
};

struct SequenceGapReport {
  std::vector<double> deltas, gaps, ratios;
  double radius = 0.0;
  AbsorptionBound bound;
  double ratio_variation = std::numeric_limits<double>::quiet_NaN();  // max/min - 1
  double linear_coefficient = 0.0;  // least squares gap = C delta
  std::vector<double> marginal_lambdas, marginal_tv;

  TableReport table() const;
};

// Throws BallViolation if a delta leaves the ball (1 - z0) / (2 K0 n_tilde),
// with n_tilde, z0 certified on the ball's sample points and K0 the declared
// family bound.
SequenceGapReport sequence_gap_experiment(const SlowFastModel& model,
                                          const SequenceGapOptions& options);

struct PoissonizationOptions {
  Point x;
  StateIndex v0 = 0;
  std::vector<std::pair<double, double>> t_lambda{{0.25, 1.0}, {1.0, 1.0}, {0.5, 4.0}};
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
  double sigmas = 3.0;
};

struct PoissonizationReport {
  struct Row {
    double t, lambda;
    StateIndex state;
    double empirical, exact, sigma;
  };
  std::vector<Row> rows;
  bool all_within = true;
  double worst_z = 0.0;

  TableReport table() const;
};

// Histogram of V_t for the frozen chain versus the Poissonized exact law.
PoissonizationReport poissonization_check(const SlowFastModel& model,
                                          const PoissonizationOptions& options);

struct AbsorptionCheckReport {
  std::vector<StateIndex> states;
  std::vector<double> exact, empirical, sigma;
  std::size_t class_index = 0;
  bool all_within = true;

  TableReport table() const;
};

// Empirical absorption frequencies into class_index from each transient
// state (replicas frozen runs each) versus the linear solve.
AbsorptionCheckReport absorption_check(const SlowFastModel& model, const Point& x,
                                       std::size_t class_index, std::size_t replicas,
                                       std::uint64_t seed, double sigmas = 3.0);

// Ordinary least squares y = a + b x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace slowfast
