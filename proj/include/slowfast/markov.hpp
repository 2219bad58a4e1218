#pragma once

// Finite-state Markov chain machinery: transition matrices, the x-indexed
// transition family of the fast process, the ergodic-class/transient
// decomposition, absorption probabilities, class stationary laws, the limit
// law they assemble into, and a grid-based certificate for the standing
// assumptions on the family.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

using StateIndex = std::size_t;
using Point = std::vector<double>;

// Numerical tolerances used across the library.
struct Tolerances {
  static constexpr double construction = 1e-12;  // row sums, probability vectors
  static constexpr double solver = 1e-10;        // linear-solve residuals
  static constexpr double singular_rcond = 1e-13;
};

class StateSpace {
 public:
  explicit StateSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(StateIndex v) const { return labels_.at(v); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<StateIndex> find(const std::string& label) const;
  // Throws InvalidArgument when the label is unknown.
  StateIndex index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

// Row-stochastic |chi| x |chi| matrix. Entry (v, v') is the probability of
// moving from v to v' when the clock rings.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(Eigen::MatrixXd entries);

  static StochasticMatrix identity(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(StateIndex from, StateIndex to) const { return entries_(from, to); }
  const Eigen::MatrixXd& entries() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

// Nonzero entries of one row, targets in increasing order.
struct SparseRow {
  std::vector<StateIndex> targets;
  std::vector<double> probs;

  void clear() {
    targets.clear();
    probs.clear();
  }
  void add(StateIndex target, double p) {
    targets.push_back(target);
    probs.push_back(p);
  }
};

// Samples the successor of a row by inverse CDF over its sparse entries.
StateIndex sample_row(const SparseRow& row, double u);

// The map x -> P_x. Rows are the primitive so that simulation never has to
// materialize a dense matrix per jump.
class TransitionFamily {
 public:
  using RowFn = std::function<void(std::span<const double> x, StateIndex v, SparseRow& out)>;

  TransitionFamily(std::size_t state_count, std::size_t dim, RowFn row_fn, double lipschitz_bound,
                   bool constant_in_x, std::vector<StateIndex> fixed_absorbing = {});

  // A decoupled family that returns the same matrix for every x.
  static TransitionFamily constant(const StochasticMatrix& matrix, std::size_t dim);
  static TransitionFamily from_matrix_fn(std::size_t state_count, std::size_t dim,
                                         std::function<StochasticMatrix(std::span<const double>)> fn,
                                         double lipschitz_bound, bool constant_in_x);

  std::size_t state_count() const { return state_count_; }
  std::size_t dim() const { return dim_; }
  double lipschitz_bound() const { return lipschitz_bound_; }
  bool constant_in_x() const { return constant_in_x_; }
  // States declared absorbing for every x (used to stop simulating clocks
  // that can no longer move the fast state).
  const std::vector<StateIndex>& fixed_absorbing() const { return fixed_absorbing_; }
  bool is_fixed_absorbing(StateIndex v) const;

  void row(std::span<const double> x, StateIndex v, SparseRow& out) const;
  StochasticMatrix evaluate(std::span<const double> x) const;

 private:
  std::size_t state_count_;
  std::size_t dim_;
  RowFn row_fn_;
  double lipschitz_bound_;
  bool constant_in_x_;
  std::vector<StateIndex> fixed_absorbing_;
  std::vector<char> absorbing_mask_;
};

// chi = E(1) u ... u E(L) u T. Classes are ordered by their smallest state;
// members and transient states are sorted ascending.
struct ChainDecomposition {
  std::vector<std::vector<StateIndex>> classes;
  std::vector<StateIndex> transient;

  std::size_t class_count() const { return classes.size(); }
  // Class index of v, or nullopt for a transient state.
  std::optional<std::size_t> class_of(StateIndex v) const;
  std::size_t state_count() const;

  bool operator==(const ChainDecomposition&) const = default;
};

struct AbsorptionProfile {
  Eigen::MatrixXd probabilities;  // |chi| x L, entry (v, i) = q_i(x, v)
  Point anchor_x;

  double q(StateIndex v, std::size_t class_index) const { return probabilities(v, class_index); }
};

struct ClassStationaryLaw {
  std::size_t class_index = 0;
  std::vector<StateIndex> members;
  Eigen::VectorXd weights;  // aligned with members
  Point anchor_x;
};

struct LimitLaw {
  Eigen::VectorXd measure;  // over chi
  Point anchor_x;
  StateIndex anchor_v = 0;
};

struct AssumptionCertificate {
  std::size_t n_tilde = 0;
  double z0 = 1.0;
  double lipschitz_estimate = 0.0;
  bool classes_stable = false;
  std::vector<Point> sample_grid;
  ChainDecomposition decomposition;  // common decomposition on the grid
};

// Closed irreducible classes are the terminal strongly connected components
// of the graph with an edge v -> v' whenever P(v, v') > 0 (exactly).
ChainDecomposition decompose(const StochasticMatrix& matrix);

// Solves (I - P_TT) q_i = P_T,E(i) 1 for every class. Throws SingularSystem
// when the block is numerically singular.
AbsorptionProfile absorption_probabilities(const StochasticMatrix& matrix,
                                           const ChainDecomposition& decomposition,
                                           Point anchor_x);

// Unique invariant law of the matrix restricted to a closed irreducible class.
ClassStationaryLaw stationary_law(const StochasticMatrix& matrix,
                                  std::span<const StateIndex> members,
                                  std::size_t class_index, Point anchor_x);

LimitLaw limit_law(const AbsorptionProfile& profile, std::span<const ClassStationaryLaw> laws,
                   StateIndex v);

// Everything the frozen process needs at one slow state.
struct FrozenAnalysis {
  StochasticMatrix matrix;
  ChainDecomposition decomposition;
  AbsorptionProfile profile;
  std::vector<ClassStationaryLaw> laws;

  LimitLaw limit(StateIndex v) const { return limit_law(profile, laws, v); }
};

FrozenAnalysis analyze_frozen(const TransitionFamily& family, std::span<const double> x);

// Row sums of (P_TT)^k for the transient block in decomposition order, i.e.
// the probability of still being transient after k jumps from each
// transient state.
Eigen::VectorXd unabsorbed_after(const StochasticMatrix& matrix,
                                 const ChainDecomposition& decomposition, std::size_t steps);

struct CertifyOptions {
  std::size_t max_steps = 100;
  // The smallest n_tilde whose worst-case unabsorbed mass is <= target is
  // reported. With target >= 1 the bound is required to be strictly < 1.
  double target_z0 = 1.0;
};

AssumptionCertificate certify_assumptions(const TransitionFamily& family,
                                          std::span<const Point> grid,
                                          const CertifyOptions& options);

}  // namespace slowfast
