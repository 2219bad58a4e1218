#pragma once

// Event-driven simulation of the slow-fast process and of the limiting
// random ODE.
//
// Jump times are exact: inter-jump gaps are drawn from Exp(rate). Between
// jumps the slow ODE is integrated with fixed-step RK4, the last step of a
// segment shortened so it lands on the jump time. Fast paths are cadlag: the
// recorded state at a jump time is the post-jump state.
//
// Random numbers come from streams keyed by (seed, replica, stream id); the
// clock and the transition choices use separate streams, so a coupled run
// and a sequence-driven run fed with the coupled slow path consume the same
// uniforms at the same jumps.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slowfast/law_oracle.hpp"
#include "slowfast/markov.hpp"

namespace slowfast {

class DriftField {
 public:
  using Fn = std::function<void(std::span<const double> x, StateIndex v, std::span<double> out)>;

  // x_independent marks a(x, v) = a(v); RK4 is exact for such fields and the
  // integrator then takes a single step per segment.
  DriftField(std::size_t dim, Fn fn, double sup_bound, bool x_independent = false);

  std::size_t dim() const { return dim_; }
  double sup_bound() const { return sup_bound_; }
  bool x_independent() const { return x_independent_; }
  void evaluate(std::span<const double> x, StateIndex v, std::span<double> out) const {
    fn_(x, v, out);
  }

 private:
  std::size_t dim_;
  Fn fn_;
  double sup_bound_;
  bool x_independent_;
};

class SlowFastModel {
 public:
  // clock_multiplicity scales lambda into the aggregated clock rate, e.g. N
  // independent per-particle clocks of rate lambda ring at total rate N lambda.
  SlowFastModel(std::string description, StateSpace states, DriftField drift,
                TransitionFamily family, double lambda, double clock_multiplicity = 1.0);

  const std::string& description() const { return description_; }
  const StateSpace& states() const { return states_; }
  const DriftField& drift() const { return drift_; }
  const TransitionFamily& family() const { return family_; }
  std::size_t dim() const { return drift_.dim(); }
  double lambda() const { return lambda_; }
  double clock_multiplicity() const { return clock_multiplicity_; }
  double rate() const { return lambda_ * clock_multiplicity_; }

  SlowFastModel with_lambda(double lambda) const;
  // FNV-1a of the description, for report provenance.
  std::uint64_t hash() const;

 private:
  std::string description_;
  StateSpace states_;
  DriftField drift_;
  TransitionFamily family_;
  double lambda_;
  double clock_multiplicity_;
};

struct SimulationOptions {
  double h = 0.0;          // RK4 step; 0 selects t_end / 1e4
  double report_dt = 0.0;  // reporting grid; 0 records only t=0, jumps and t_end
  double max_expected_jumps = 1e9;
  std::uint64_t replica = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> slow_states;  // empty for fast-only simulations
  std::vector<StateIndex> fast_states;
  std::vector<char> jumped;  // 1 where the row is a clock ring
  std::vector<double> jump_times;

  std::size_t jump_count() const { return jump_times.size(); }
};

Trajectory simulate_coupled(const SlowFastModel& model, const Point& x0, StateIndex v0,
                            double t_end, std::uint64_t seed, const SimulationOptions& options = {});

// Fast path of the frozen process (matrix fixed at P_{x_frozen}).
Trajectory simulate_frozen(const SlowFastModel& model, const Point& x_frozen, StateIndex v0,
                           double t_end, std::uint64_t seed, const SimulationOptions& options = {});

// Fast path where the k-th jump uses P_{x(k)}. Throws SequenceTooShort.
Trajectory simulate_sequence_driven(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                    const JumpSequence& sequence, double t_end, std::uint64_t seed,
                                    const SimulationOptions& options = {});

enum class FrozenMeasureMode { StateDependent, AnchoredAtX0 };

const char* to_string(FrozenMeasureMode mode);

// Class-averaged drift a_i(z) = sum_{v in E(i)} a(z, v) mu_i(z; v). Classes are
// identified by their member sets in the reference decomposition at x0.
class AveragedDrift {
 public:
  AveragedDrift(const SlowFastModel& model, const Point& x0,
                FrozenMeasureMode mode = FrozenMeasureMode::StateDependent);

  const FrozenAnalysis& reference() const { return reference_; }
  std::size_t class_count() const { return reference_.decomposition.class_count(); }

  // Throws ClassMissing if class i does not exist in the decomposition at z.
  void evaluate(std::size_t class_index, std::span<const double> z, std::span<double> out) const;
  Point evaluate(std::size_t class_index, std::span<const double> z) const;
  // Stationary weights of class i at z under the selected mode.
  ClassStationaryLaw class_law(std::size_t class_index, std::span<const double> z) const;
  // True when the averaged field does not depend on z, so RK4 is exact.
  bool x_independent() const;

 private:
  const SlowFastModel* model_;
  FrozenMeasureMode mode_;
  FrozenAnalysis reference_;
  bool laws_fixed_;
};

// Deterministic branch y_i(t) of the random ODE.
Point integrate_branch(const AveragedDrift& drift, std::size_t class_index, const Point& x0,
                       double t_end, double h);

struct AveragedRealization {
  std::size_t zeta = 0;  // drawn once from q(x0, v0)
  Trajectory path;       // slow states on the reporting grid
};

AveragedRealization simulate_averaged(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                      double t_end, std::uint64_t seed,
                                      FrozenMeasureMode mode = FrozenMeasureMode::StateDependent,
                                      const SimulationOptions& options = {});

// End state of one coupled replica, plus the class eventually reached by a
// frozen chain at x0 that shares the replica's clock and transition
// uniforms. The frozen class is an exact draw from q(x0, v0).
//
// For families constant in x, self-transitions are thinned out: the chain
// waits an Exp(rate (1 - P(v, v))) time and then moves off-diagonal. The
// endpoint law is unchanged and jumps then counts state changes only.
struct CoupledEndpoint {
  Point x;
  StateIndex v = 0;
  std::size_t jumps = 0;
  std::size_t frozen_class = 0;
};

class EndpointSimulator {
 public:
  EndpointSimulator(const SlowFastModel& model, const Point& x0, StateIndex v0, double t_end,
                    double h);

  CoupledEndpoint run(std::uint64_t seed, std::uint64_t replica) const;
  const FrozenAnalysis& frozen() const { return frozen_; }

 private:
  CoupledEndpoint run_thinned(std::uint64_t seed, std::uint64_t replica) const;

  const SlowFastModel* model_;
  Point x0_;
  StateIndex v0_;
  double t_end_;
  double h_;
  FrozenAnalysis frozen_;
  std::vector<SparseRow> frozen_rows_;
  std::vector<int> frozen_class_of_;
  std::vector<SparseRow> move_rows_;  // off-diagonal part, renormalized
  std::vector<double> leave_probability_;
};

// Jump chain of the frozen process at x, run until it enters an ergodic
// class. Each sample is an exact draw from q(x, v0).
class AbsorptionSampler {
 public:
  AbsorptionSampler(const TransitionFamily& family, const Point& x);

  std::size_t sample(StateIndex v0, std::uint64_t seed, std::uint64_t replica) const;
  const FrozenAnalysis& analysis() const { return analysis_; }

 private:
  FrozenAnalysis analysis_;
  std::vector<SparseRow> rows_;
  std::vector<int> class_of_;
};

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  std::size_t count = 0;

  double standard_error() const;
};

// Order-independent pairwise summation.
double pairwise_sum(std::span<const double> values);
SampleStats sample_stats(std::span<const double> values);

// Runs body(replica) for replica in [0, count) on up to hardware_concurrency
// threads. body must only touch replica-owned state.
void parallel_replicas(std::size_t count, const std::function<void(std::size_t)>& body);

// Monte Carlo mean/variance of f(X_t) over independent coupled replicas.
SampleStats monte_carlo_coupled(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                double t_end, const std::function<double(std::span<const double>)>& f,
                                std::size_t replicas, std::uint64_t seed, double h = 0.0);

// CSV columns: t, x_1..x_N, v_label, jumped. Comment lines starting with '#'
// carry provenance. Written atomically (temporary file, then rename).
void write_trajectory_csv(const std::string& path, const SlowFastModel& model,
                          const Trajectory& trajectory, const std::string& provenance = {});

}  // namespace slowfast
