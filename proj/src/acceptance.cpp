#include "slowfast/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/harness.hpp"
#include "slowfast/models.hpp"
#include "slowfast/oracle.hpp"
#include "slowfast/random.hpp"

namespace slowfast {

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) { return format_double(v); }

std::string list(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t k = 0; k < values.size(); ++k) out += (k ? ", " : "") + num(values[k]);
  return out + "]";
}

Outcome decomposition_equivalence(const AcceptanceSettings& s) {
  std::mt19937_64 rng(derive_seed(s.seed, 1));
  std::size_t mismatches = 0, classes = 0, transient = 0;
  for (std::size_t k = 0; k < s.decomposition_matrices; ++k) {
    const Eigen::MatrixXd p =
        oracle::random_sparse_stochastic(s.decomposition_states, s.decomposition_density, rng);
    const ChainDecomposition fast = decompose(StochasticMatrix(p));
    const ChainDecomposition brute = oracle::brute_force_decomposition(p);
    if (!(fast == brute)) ++mismatches;
    classes += fast.class_count();
    transient += fast.transient.size();
  }
  std::ostringstream d;
  d << "matrices=" << s.decomposition_matrices << " mismatches=" << mismatches
    << " classes=" << classes << " transient=" << transient;
  return {mismatches == 0 && s.decomposition_matrices > 0, d.str()};
}

Outcome absorption_correctness(const AcceptanceSettings& s) {
  const SlowFastModel toy = build_toy(ToyParams{3, 1.0, 0.5});
  const Point x(3, 0.0);
  const StateIndex minus_e = toy.states().index_of("---");
  const FrozenAnalysis analysis = analyze_frozen(toy.family(), x);
  const std::size_t minus_class = *analysis.decomposition.class_of(minus_e);
  const AbsorptionCheckReport mc = absorption_check(toy, x, minus_class, s.absorption_replicas,
                                                    derive_seed(s.seed, 2), s.absorption_sigmas);
  const double q = analysis.profile.q(toy.states().index_of("++-"), minus_class);
  const bool q_ok = std::abs(q - s.toy3_expected_q) <= s.toy3_q_tolerance;
  double worst = 0.0;
  for (std::size_t k = 0; k < mc.states.size(); ++k)
    if (mc.sigma[k] > 0.0) worst = std::max(worst, std::abs(mc.empirical[k] - mc.exact[k]) / mc.sigma[k]);
  std::ostringstream d;
  d << "transient=" << mc.states.size() << " worst_z=" << num(worst) << " q(++-)=" << num(q)
    << " expected=" << num(s.toy3_expected_q);
  return {mc.all_within && q_ok && mc.states.size() == 6, d.str()};
}

Outcome decay(const AcceptanceSettings& s) {
  const SlowFastModel toy = build_toy(ToyParams{2, 1.0, 0.5});
  FastDecayOptions o;
  o.x = Point(2, 0.0);
  o.v0 = toy.states().index_of("+-");
  o.envelope_steps = s.envelope_steps;
  const DecayReport r = fast_decay_experiment(toy, o);
  std::ostringstream d;
  d << "c1_hat=" << num(r.c1_hat) << " K_hat=" << num(r.k_hat) << " r_squared=" << num(r.r_squared)
    << " n_tilde=" << r.bound.n_tilde << " z0=" << num(r.bound.z0)
    << " envelope_holds=" << (r.envelope_holds ? "true" : "false");
  const bool ok = r.fit_points >= 2 && r.r_squared >= s.decay_min_r_squared && r.c1_hat > 0.0 &&
                  r.envelope_holds;
  return {ok, d.str()};
}

Outcome gap_linearity(const AcceptanceSettings& s) {
  NavigationParams np;
  np.n = 2;
  np.beta = s.navigation_beta;
  const SlowFastModel nav = build_coupled_navigation(np);
  SequenceGapOptions o;
  o.x0 = {0.3, -0.2};
  o.v0 = nav.states().index_of("+-");
  o.deltas = s.gap_deltas;
  o.t = s.gap_t;
  o.lambda = s.gap_lambda;
  o.marginal_lambdas.clear();
  const SequenceGapReport r = sequence_gap_experiment(nav, o);
  std::ostringstream d;
  d << "ratios=" << list(r.ratios) << " variation=" << num(r.ratio_variation)
    << " ball_radius=" << num(r.radius);
  const bool ok = std::isfinite(r.ratio_variation) && r.ratio_variation < s.gap_max_variation &&
                  s.navigation_beta > 0.0;
  return {ok, d.str()};
}

WeakErrorOptions weak_options(const AcceptanceSettings& s, const SlowFastModel& m,
                              std::uint64_t index) {
  WeakErrorOptions o;
  o.x0 = Point(m.dim(), 0.0);
  o.v0 = m.states().index_of("+-");
  o.t = s.weak_t;
  o.lambda_grid = s.weak_lambdas;
  o.replicas = s.weak_replicas;
  o.seed = derive_seed(s.seed, index);
  o.dominance_ratio = s.dominance_ratio;
  return o;
}

bool weak_ok(const WeakErrorReport& r, const AcceptanceSettings& s) {
  return r.decreasing_up_to_overlap() && r.slope_points >= 2 && r.slope <= s.slope_threshold;
}

std::string weak_detail(const std::string& label, const WeakErrorReport& r) {
  std::vector<double> errors;
  for (const auto& row : r.rows) errors.push_back(row.error);
  std::ostringstream d;
  d << label << ": errors=" << list(errors) << " slope=" << num(r.slope)
    << " points=" << r.slope_points << " decreasing=" << (r.decreasing_up_to_overlap() ? "true" : "false");
  return d.str();
}

Outcome weak_rate(const AcceptanceSettings& s) {
  const Observable f = make_observable("tanh", 0);
  const SlowFastModel toy = build_toy(ToyParams{2, 1.0, 0.5});
  const WeakErrorReport a = weak_error_experiment(toy, f, weak_options(s, toy, 51));
  NavigationParams np;
  np.n = 2;
  np.beta = s.navigation_beta;
  const SlowFastModel nav = build_coupled_navigation(np);
  const WeakErrorReport b = weak_error_experiment(nav, f, weak_options(s, nav, 52));
  return {weak_ok(a, s) && weak_ok(b, s),
          weak_detail("toy", a) + "; " + weak_detail("navigation", b)};
}

Outcome ergodic_generalization(const AcceptanceSettings& s) {
  ErgodicVariantParams ep;
  ep.n = 2;
  ep.p = s.ergodic_p;
  const SlowFastModel m = build_ergodic_class_variant(ep);
  const Point x0(2, 0.0);
  const AveragedDrift averaged(m, x0);
  const double speed = (1.0 - ep.p) * ep.drift_a + ep.p * ep.drift_b;
  double worst = 0.0;
  bool structure = averaged.class_count() == 2;
  for (std::size_t i = 0; structure && i < 2; ++i) {
    const double sign = i == 0 ? 1.0 : -1.0;
    const Point a = averaged.evaluate(i, x0);
    for (double v : a) worst = std::max(worst, std::abs(v - sign * speed));
    structure = structure && averaged.reference().decomposition.classes[i].size() == 2;
  }
  const WeakErrorReport r =
      weak_error_experiment(m, make_observable("tanh", 0), weak_options(s, m, 61));
  std::ostringstream d;
  d << "drift_error=" << num(worst) << "; " << weak_detail("ergodic_variant", r);
  return {structure && worst <= s.drift_tolerance && weak_ok(r, s), d.str()};
}

std::string reproducibility_run(const AcceptanceSettings& s) {
  const SlowFastModel toy = build_toy(ToyParams{2, 1.0, 0.5});
  WeakErrorOptions o = weak_options(s, toy, 71);
  o.replicas = s.reproducibility_replicas;
  o.lambda_grid = {10.0, 100.0};
  const TableReport weak = weak_error_experiment(toy, make_observable("tanh", 0), o).table();
  NavigationParams np;
  np.beta = s.navigation_beta;
  const SlowFastModel nav = build_coupled_navigation(np).with_lambda(10.0);
  SimulationOptions so;
  so.report_dt = 0.01;
  so.h = 0.001;
  const Trajectory path = simulate_coupled(nav, {0.1, -0.1}, 1, 1.0, derive_seed(s.seed, 72), so);
  std::ostringstream out;
  out << to_csv(weak) << to_summary(weak);
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    out << num(path.times[k]);
    for (double x : path.slow_states[k]) out << ',' << num(x);
    out << ',' << path.fast_states[k] << '\n';
  }
  return out.str();
}

Outcome reproducibility(const AcceptanceSettings& s) {
  const std::string first = reproducibility_run(s);
  const std::string second = reproducibility_run(s);
  std::ostringstream d;
  d << "bytes=" << first.size() << " identical=" << (first == second ? "true" : "false");
  return {first == second, d.str()};
}

Outcome poissonization(const AcceptanceSettings& s) {
  const SlowFastModel toy = build_toy(ToyParams{3, 1.0, 0.5});
  PoissonizationOptions o;
  o.x = Point(3, 0.0);
  o.v0 = toy.states().index_of("++-");
  o.replicas = s.poisson_replicas;
  o.seed = derive_seed(s.seed, 8);
  o.sigmas = s.poisson_sigmas;
  const PoissonizationReport r = poissonization_check(toy, o);
  std::ostringstream d;
  d << "pairs=" << o.t_lambda.size() << " cells=" << r.rows.size() << " worst_z=" << num(r.worst_z);
  return {r.all_within, d.str()};
}

Outcome run_one(int id, const AcceptanceSettings& s) {
  switch (id) {
    case 1: return decomposition_equivalence(s);
    case 2: return absorption_correctness(s);
    case 3: return decay(s);
    case 4: return gap_linearity(s);
    case 5: return weak_rate(s);
    case 6: return ergodic_generalization(s);
    case 7: return reproducibility(s);
    case 8: return poissonization(s);
    default: fail(ErrorCode::InvalidArgument, "unknown criterion " + std::to_string(id));
  }
}

}  // namespace

std::string criterion_name(int id) {
  switch (id) {
    case 1: return "decomposition oracle equivalence";
    case 2: return "absorption correctness";
    case 3: return "exponential decay of the frozen law";
    case 4: return "sequence gap linearity";
    case 5: return "weak convergence rate";
    case 6: return "ergodic class generalization";
    case 7: return "reproducibility";
    case 8: return "poissonization consistency";
    default: return "unknown";
  }
}

bool AcceptanceResult::all_passed() const {
  if (results.empty()) return false;
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

AcceptanceResult run_acceptance(const AcceptanceSettings& settings,
                                const std::function<void(const CriterionResult&)>& progress) {
  std::vector<int> ids = settings.criteria;
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8};
  for (int id : ids) require(id >= 1 && id <= 8, "criteria are numbered 1 to 8");
  AcceptanceResult out;
  for (int id : ids) {
    CriterionResult r;
    r.id = id;
    r.name = criterion_name(id);
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = run_one(id, settings);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const Error& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (static_cast<std::size_t>(id) < settings.runtime_limits.size()) {
      const double limit = settings.runtime_limits[static_cast<std::size_t>(id)];
      r.within_runtime = limit <= 0.0 || r.seconds < limit;
    }
    r.passed = r.passed && r.within_runtime;
    if (!r.within_runtime) r.detail += " runtime_exceeded=true";
    if (progress) progress(r);
    out.results.push_back(r);
  }
  return out;
}

std::string acceptance_report(const AcceptanceResult& result, const AcceptanceSettings& s) {
  std::ostringstream out;
  out << "# acceptance report\n";
  out << "seed = " << s.seed << '\n';
  out << "absorption_replicas = " << s.absorption_replicas << '\n';
  out << "absorption_sigmas = " << num(s.absorption_sigmas) << '\n';
  out << "decay_min_r_squared = " << num(s.decay_min_r_squared) << '\n';
  out << "gap_deltas = " << list(s.gap_deltas) << '\n';
  out << "gap_max_variation = " << num(s.gap_max_variation) << '\n';
  out << "navigation_beta = " << num(s.navigation_beta) << '\n';
  out << "weak_replicas = " << s.weak_replicas << '\n';
  out << "weak_lambdas = " << list(s.weak_lambdas) << '\n';
  out << "slope_threshold = " << num(s.slope_threshold) << '\n';
  out << "ergodic_p = " << num(s.ergodic_p) << '\n';
  out << "drift_tolerance = " << num(s.drift_tolerance) << '\n';
  out << "poisson_replicas = " << s.poisson_replicas << '\n';
  out << "poisson_sigmas = " << num(s.poisson_sigmas) << '\n';
  for (const auto& r : result.results)
    out << "criterion " << r.id << " (" << r.name << "): " << (r.passed ? "PASS" : "FAIL") << " | "
        << r.detail << '\n';
  out << "overall = " << (result.all_passed() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace slowfast
