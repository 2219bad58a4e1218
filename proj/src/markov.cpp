#include "slowfast/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "slowfast/error.hpp"

namespace slowfast {

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require(!labels_.empty(), "state space must contain at least one state");
  std::vector<std::string> sorted = labels_;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "state labels must be unique");
}

std::optional<StateIndex> StateSpace::find(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<StateIndex>(it - labels_.begin());
}

StateIndex StateSpace::index_of(const std::string& label) const {
  const auto v = find(label);
  if (!v) fail(ErrorCode::InvalidArgument, "unknown state label '" + label + "'");
  return *v;
}

StochasticMatrix::StochasticMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  require(entries_.rows() > 0 && entries_.rows() == entries_.cols(),
          "transition matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      const double p = entries_(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "entry (" << i << "," << j << ") = " << p << " is not a probability";
        fail(ErrorCode::InvalidArgument, msg.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > Tolerances::construction) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << sum;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
  }
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  return StochasticMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n)));
}

StateIndex sample_row(const SparseRow& row, double u) {
  double cumulative = 0.0;
  const std::size_t n = row.targets.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    cumulative += row.probs[k];
    if (u < cumulative) return row.targets[k];
  }
  return row.targets[n - 1];
}

TransitionFamily::TransitionFamily(std::size_t state_count, std::size_t dim, RowFn row_fn,
                                   double lipschitz_bound, bool constant_in_x,
                                   std::vector<StateIndex> fixed_absorbing)
    : state_count_(state_count),
      dim_(dim),
      row_fn_(std::move(row_fn)),
      lipschitz_bound_(lipschitz_bound),
      constant_in_x_(constant_in_x),
      fixed_absorbing_(std::move(fixed_absorbing)),
      absorbing_mask_(state_count, 0) {
  require(state_count_ > 0, "transition family needs at least one state");
  require(lipschitz_bound_ >= 0.0, "Lipschitz bound must be nonnegative");
  require(static_cast<bool>(row_fn_), "transition family needs a row function");
  for (StateIndex v : fixed_absorbing_) {
    require(v < state_count_, "absorbing state out of range");
    absorbing_mask_[v] = 1;
  }
}

TransitionFamily TransitionFamily::constant(const StochasticMatrix& matrix, std::size_t dim) {
  const Eigen::MatrixXd m = matrix.entries();
  std::vector<StateIndex> absorbing;
  for (Eigen::Index v = 0; v < m.rows(); ++v)
    if (m(v, v) == 1.0) absorbing.push_back(static_cast<StateIndex>(v));
  auto row_fn = [m](std::span<const double>, StateIndex v, SparseRow& out) {
    out.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(static_cast<Eigen::Index>(v), j) > 0.0)
        out.add(static_cast<StateIndex>(j), m(static_cast<Eigen::Index>(v), j));
  };
  return TransitionFamily(matrix.size(), dim, row_fn, 0.0, true, std::move(absorbing));
}

TransitionFamily TransitionFamily::from_matrix_fn(
    std::size_t state_count, std::size_t dim,
    std::function<StochasticMatrix(std::span<const double>)> fn, double lipschitz_bound,
    bool constant_in_x) {
  auto row_fn = [fn, state_count](std::span<const double> x, StateIndex v, SparseRow& out) {
    const StochasticMatrix m = fn(x);
    require(m.size() == state_count, "matrix function returned the wrong size");
    out.clear();
    for (StateIndex j = 0; j < state_count; ++j)
      if (m(v, j) > 0.0) out.add(j, m(v, j));
  };
  return TransitionFamily(state_count, dim, row_fn, lipschitz_bound, constant_in_x);
}

bool TransitionFamily::is_fixed_absorbing(StateIndex v) const { return absorbing_mask_[v] != 0; }

void TransitionFamily::row(std::span<const double> x, StateIndex v, SparseRow& out) const {
  out.clear();
  row_fn_(x, v, out);
}

StochasticMatrix TransitionFamily::evaluate(std::span<const double> x) const {
  require(x.size() == dim_, "slow state has the wrong dimension");
  const auto n = static_cast<Eigen::Index>(state_count_);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  SparseRow row_buffer;
  for (StateIndex v = 0; v < state_count_; ++v) {
    row(x, v, row_buffer);
    for (std::size_t k = 0; k < row_buffer.targets.size(); ++k)
      m(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(row_buffer.targets[k])) +=
          row_buffer.probs[k];
  }
  return StochasticMatrix(std::move(m));
}

std::optional<std::size_t> ChainDecomposition::class_of(StateIndex v) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (std::binary_search(classes[i].begin(), classes[i].end(), v)) return i;
  return std::nullopt;
}

std::size_t ChainDecomposition::state_count() const {
  std::size_t n = transient.size();
  for (const auto& c : classes) n += c.size();
  return n;
}

namespace {

// Iterative Tarjan. Returns the component id of every vertex.
std::vector<std::size_t> strongly_connected_components(
    const std::vector<std::vector<StateIndex>>& adjacency, std::size_t& component_count) {
  const std::size_t n = adjacency.size();
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnvisited), lowlink(n, 0), component(n, kUnvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<StateIndex> stack;
  std::vector<std::pair<StateIndex, std::size_t>> call;  // (vertex, next edge)
  std::size_t counter = 0;
  component_count = 0;

  for (StateIndex root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge < adjacency[v].size()) {
        const StateIndex w = adjacency[v][edge++];
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          lowlink[v] = std::min(lowlink[v], index[w]);
        }
        continue;
      }
      const StateIndex done = v;
      call.pop_back();
      if (!call.empty()) {
        const StateIndex parent = call.back().first;
        lowlink[parent] = std::min(lowlink[parent], lowlink[done]);
      }
      if (lowlink[done] == index[done]) {
        StateIndex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          component[w] = component_count;
        } while (w != done);
        ++component_count;
      }
    }
  }
  return component;
}

std::vector<std::vector<StateIndex>> positive_pattern(const Eigen::MatrixXd& m) {
  std::vector<std::vector<StateIndex>> adjacency(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) > 0.0) adjacency[static_cast<std::size_t>(i)].push_back(static_cast<StateIndex>(j));
  return adjacency;
}

// Terminal components: no edge leaves the component.
std::vector<char> terminal_components(const std::vector<std::vector<StateIndex>>& adjacency,
                                      const std::vector<std::size_t>& component,
                                      std::size_t component_count) {
  std::vector<char> terminal(component_count, 1);
  for (StateIndex v = 0; v < adjacency.size(); ++v)
    for (StateIndex w : adjacency[v])
      if (component[w] != component[v]) terminal[component[v]] = 0;
  return terminal;
}

std::vector<Eigen::Index> as_eigen_indices(std::span<const StateIndex> states) {
  return std::vector<Eigen::Index>(states.begin(), states.end());
}

}  // namespace

ChainDecomposition decompose(const StochasticMatrix& matrix) {
  const auto adjacency = positive_pattern(matrix.entries());
  std::size_t count = 0;
  const auto component = strongly_connected_components(adjacency, count);
  const auto terminal = terminal_components(adjacency, component, count);

  std::vector<std::vector<StateIndex>> by_component(count);
  ChainDecomposition d;
  for (StateIndex v = 0; v < adjacency.size(); ++v) {
    if (terminal[component[v]])
      by_component[component[v]].push_back(v);
    else
      d.transient.push_back(v);
  }
  for (auto& members : by_component)
    if (!members.empty()) d.classes.push_back(std::move(members));
  std::sort(d.classes.begin(), d.classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return d;
}

AbsorptionProfile absorption_probabilities(const StochasticMatrix& matrix,
                                           const ChainDecomposition& decomposition,
                                           Point anchor_x) {
  const std::size_t n = matrix.size();
  require(decomposition.state_count() == n, "decomposition does not cover the state space");
  const std::size_t class_count = decomposition.class_count();
  const auto& p = matrix.entries();

  AbsorptionProfile profile;
  profile.anchor_x = std::move(anchor_x);
  profile.probabilities = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(class_count));
  for (std::size_t i = 0; i < class_count; ++i)
    for (StateIndex v : decomposition.classes[i])
      profile.probabilities(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(i)) = 1.0;

  const auto& transient = decomposition.transient;
  const auto m = static_cast<Eigen::Index>(transient.size());
  if (m == 0) return profile;

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(class_count));
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto v = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < m; ++b)
      system(a, b) -= p(v, static_cast<Eigen::Index>(transient[static_cast<std::size_t>(b)]));
    for (std::size_t i = 0; i < class_count; ++i)
      for (StateIndex w : decomposition.classes[i])
        rhs(a, static_cast<Eigen::Index>(i)) += p(v, static_cast<Eigen::Index>(w));
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > Tolerances::singular_rcond))
    fail(ErrorCode::SingularSystem,
         "I - P restricted to the transient set is singular; the set is not transient");
  const Eigen::MatrixXd solution = lu.solve(rhs);
  if ((system * solution - rhs).cwiseAbs().maxCoeff() > Tolerances::solver)
    fail(ErrorCode::SingularSystem, "absorption solve residual exceeds tolerance");

  for (Eigen::Index a = 0; a < m; ++a) {
    const auto v = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(a)]);
    profile.probabilities.row(v) = solution.row(a);
    if (std::abs(solution.row(a).sum() - 1.0) > Tolerances::solver)
      fail(ErrorCode::SingularSystem, "absorption probabilities do not sum to one");
  }
  return profile;
}

ClassStationaryLaw stationary_law(const StochasticMatrix& matrix,
                                  std::span<const StateIndex> members, std::size_t class_index,
                                  Point anchor_x) {
  require(!members.empty(), "class must be nonempty");
  const auto idx = as_eigen_indices(members);
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd restricted(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b)
      restricted(a, b) = matrix.entries()(idx[static_cast<std::size_t>(a)],
                                          idx[static_cast<std::size_t>(b)]);
    if (std::abs(restricted.row(a).sum() - 1.0) > Tolerances::construction)
      fail(ErrorCode::InvalidArgument, "class is not closed under the transition matrix");
  }

  {
    const auto adjacency = positive_pattern(restricted);
    std::size_t count = 0;
    const auto component = strongly_connected_components(adjacency, count);
    const auto terminal = terminal_components(adjacency, component, count);
    if (std::count(terminal.begin(), terminal.end(), 1) > 1)
      fail(ErrorCode::NotIrreducible, "restricted matrix has more than one closed class");
  }

  // mu^T (R - I) = 0 with the last balance equation replaced by sum(mu) = 1.
  Eigen::MatrixXd system = restricted.transpose() - Eigen::MatrixXd::Identity(m, m);
  system.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd mu = lu.solve(rhs);
  for (Eigen::Index a = 0; a < m; ++a)
    if (mu(a) < 0.0) mu(a) = 0.0;
  mu /= mu.sum();

  const double residual = (restricted.transpose() * mu - mu).cwiseAbs().sum();
  if (!(residual <= Tolerances::solver))
    fail(ErrorCode::SingularSystem, "stationary solve residual exceeds tolerance");

  ClassStationaryLaw law;
  law.class_index = class_index;
  law.members.assign(members.begin(), members.end());
  law.weights = std::move(mu);
  law.anchor_x = std::move(anchor_x);
  return law;
}

LimitLaw limit_law(const AbsorptionProfile& profile, std::span<const ClassStationaryLaw> laws,
                   StateIndex v) {
  const auto n = profile.probabilities.rows();
  require(static_cast<Eigen::Index>(v) < n, "state out of range");
  require(static_cast<Eigen::Index>(laws.size()) == profile.probabilities.cols(),
          "one stationary law per class is required");
  LimitLaw law;
  law.anchor_x = profile.anchor_x;
  law.anchor_v = v;
  law.measure = Eigen::VectorXd::Zero(n);
  for (const auto& cls : laws) {
    if (cls.anchor_x != profile.anchor_x)
      fail(ErrorCode::AnchorMismatch, "stationary law and absorption profile anchors differ");
    const double q = profile.q(v, cls.class_index);
    for (std::size_t k = 0; k < cls.members.size(); ++k)
      law.measure(static_cast<Eigen::Index>(cls.members[k])) += q * cls.weights(static_cast<Eigen::Index>(k));
  }
  return law;
}

FrozenAnalysis analyze_frozen(const TransitionFamily& family, std::span<const double> x) {
  Point anchor(x.begin(), x.end());
  StochasticMatrix matrix = family.evaluate(x);
  ChainDecomposition decomposition = decompose(matrix);
  AbsorptionProfile profile = absorption_probabilities(matrix, decomposition, anchor);
  std::vector<ClassStationaryLaw> laws;
  for (std::size_t i = 0; i < decomposition.class_count(); ++i)
    laws.push_back(stationary_law(matrix, decomposition.classes[i], i, anchor));
  return FrozenAnalysis{std::move(matrix), std::move(decomposition), std::move(profile),
                        std::move(laws)};
}

Eigen::VectorXd unabsorbed_after(const StochasticMatrix& matrix,
                                 const ChainDecomposition& decomposition, std::size_t steps) {
  const auto& transient = decomposition.transient;
  const auto m = static_cast<Eigen::Index>(transient.size());
  Eigen::MatrixXd block(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      block(a, b) = matrix.entries()(static_cast<Eigen::Index>(transient[static_cast<std::size_t>(a)]),
                                     static_cast<Eigen::Index>(transient[static_cast<std::size_t>(b)]));
  Eigen::VectorXd mass = Eigen::VectorXd::Ones(m);
  for (std::size_t k = 0; k < steps; ++k) mass = block * mass;
  return mass;
}

AssumptionCertificate certify_assumptions(const TransitionFamily& family,
                                          std::span<const Point> grid,
                                          const CertifyOptions& options) {
  require(!grid.empty(), "certification grid must be nonempty");
  require(options.max_steps >= 1, "max_steps must be at least 1");

  std::vector<StochasticMatrix> matrices;
  matrices.reserve(grid.size());
  for (const auto& x : grid) matrices.push_back(family.evaluate(x));

  AssumptionCertificate cert;
  cert.sample_grid.assign(grid.begin(), grid.end());
  cert.decomposition = decompose(matrices.front());
  for (std::size_t g = 1; g < matrices.size(); ++g) {
    if (!(decompose(matrices[g]) == cert.decomposition)) {
      std::ostringstream msg;
      msg << "decomposition at grid point " << g << " differs from grid point 0";
      fail(ErrorCode::ClassStructureVaries, msg.str());
    }
  }
  cert.classes_stable = true;

  const auto& transient = cert.decomposition.transient;
  const auto m = static_cast<Eigen::Index>(transient.size());
  if (m == 0) {
    cert.n_tilde = 1;
    cert.z0 = 0.0;
  } else {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& mat : matrices) {
      Eigen::MatrixXd block(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
          block(a, b) = mat.entries()(static_cast<Eigen::Index>(transient[static_cast<std::size_t>(a)]),
                                      static_cast<Eigen::Index>(transient[static_cast<std::size_t>(b)]));
      blocks.push_back(std::move(block));
    }
    std::vector<Eigen::VectorXd> mass(blocks.size(), Eigen::VectorXd::Ones(m));
    bool found = false;
    for (std::size_t k = 1; k <= options.max_steps && !found; ++k) {
      double worst = 0.0;
      for (std::size_t g = 0; g < blocks.size(); ++g) {
        mass[g] = blocks[g] * mass[g];
        worst = std::max(worst, mass[g].maxCoeff());
      }
      const bool ok = options.target_z0 >= 1.0 ? worst < 1.0 : worst <= options.target_z0;
      if (ok) {
        cert.n_tilde = k;
        cert.z0 = worst;
        found = true;
      }
    }
    if (!found) {
      std::ostringstream msg;
      msg << "no n_tilde <= " << options.max_steps << " bounds the unabsorbed mass";
      fail(ErrorCode::NoAbsorptionBound, msg.str());
    }
  }

  double estimate = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      double distance = 0.0;
      for (std::size_t k = 0; k < grid[a].size(); ++k) distance += std::abs(grid[a][k] - grid[b][k]);
      if (distance == 0.0) continue;
      const Eigen::MatrixXd diff = matrices[a].entries() - matrices[b].entries();
      const double worst_row = diff.cwiseAbs().rowwise().sum().maxCoeff();
      estimate = std::max(estimate, worst_row / distance);
    }
  }
  cert.lipschitz_estimate = estimate;
  return cert;
}

}  // namespace slowfast
