#include "slowfast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/law_oracle.hpp"
#include "slowfast/random.hpp"

namespace slowfast {

Observable make_observable(const std::string& kind, std::size_t coordinate) {
  if (kind == "coordinate")
    return {"coordinate[" + std::to_string(coordinate + 1) + "]",
            [coordinate](std::span<const double> x) { return x[coordinate]; }};
  if (kind == "tanh")
    return {"tanh[" + std::to_string(coordinate + 1) + "]",
            [coordinate](std::span<const double> x) { return std::tanh(x[coordinate]); }};
  if (kind == "bump")
    return {"bump", [](std::span<const double> x) {
              double r2 = 0.0;
              for (double v : x) r2 += v * v;
              return std::exp(-0.5 * r2);
            }};
  fail(ErrorCode::InvalidArgument, "unknown observable '" + kind + "'");
}

std::vector<std::string> observable_catalog() { return {"coordinate", "tanh", "bump"}; }

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "a line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  require(sxx > 0.0, "a line fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

namespace {

void check_start(const SlowFastModel& model, const Point& x, StateIndex v) {
  if (x.size() != model.dim())
    fail(ErrorCode::DimensionMismatch, "slow state has the wrong dimension");
  require(v < model.states().size(), "fast state out of range");
}

void check_grid(const std::vector<double>& grid, const std::string& what) {
  require(!grid.empty(), what + " grid is empty");
  for (double value : grid)
    require(value > 0.0 && std::isfinite(value), what + " grid values must be positive");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

bool WeakErrorReport::decreasing_up_to_overlap() const {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& a = rows[k - 1];
    const auto& b = rows[k];
    const bool decreased = b.error < a.error;
    const bool overlap = b.error - b.error_halfwidth <= a.error + a.error_halfwidth;
    if (!decreased && !overlap) return false;
  }
  return true;
}

TableReport WeakErrorReport::table() const {
  TableReport t;
  t.name = "weak_error";
  t.columns = {"lambda",        "coupled_mean", "coupled_halfwidth", "averaged_expectation",
               "error",         "error_halfwidth", "plain_error",    "mc_dominates"};
  for (const auto& r : rows)
    t.rows.push_back({r.lambda, r.coupled_mean, r.coupled_halfwidth, r.averaged_expectation,
                      r.error, r.error_halfwidth, r.plain_error, r.mc_dominates ? 1.0 : 0.0});
  t.add_summary("observable", observable);
  t.add_summary("t", this->t);
  t.add_summary("replicas", static_cast<double>(replicas));
  t.add_summary("confidence", "0.95");
  t.add_summary("fitted_slope", slope);
  t.add_summary("slope_points", static_cast<double>(slope_points));
  t.add_summary("decreasing_up_to_overlap", bool_text(decreasing_up_to_overlap()));
  t.add_summary("mc_error_dominates", bool_text(any_mc_dominates));
  for (std::size_t i = 0; i < branch_values.size(); ++i) {
    t.add_summary("branch" + std::to_string(i + 1) + ".probability", branch_probabilities[i]);
    t.add_summary("branch" + std::to_string(i + 1) + ".value", branch_values[i]);
  }
  return t;
}

WeakErrorReport weak_error_experiment(const SlowFastModel& model, const Observable& observable,
                                      const WeakErrorOptions& options) {
  check_start(model, options.x0, options.v0);
  check_grid(options.lambda_grid, "lambda");
  require(options.t > 0.0 && std::isfinite(options.t), "t must be positive");
  require(options.replicas >= 1000, "weak-error experiments need at least 1000 replicas");
  require(static_cast<bool>(observable.f), "observable is empty");

  WeakErrorReport report;
  report.observable = observable.name;
  report.t = options.t;
  report.replicas = options.replicas;

  const AveragedDrift averaged(model, options.x0, options.mode);
  const std::size_t classes = averaged.class_count();
  report.branch_values.assign(classes, 0.0);
  report.branch_probabilities.assign(classes, 0.0);
  double expectation = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    const double q = averaged.reference().profile.q(options.v0, i);
    report.branch_probabilities[i] = q;
    if (q <= 0.0) continue;
    const Point y = integrate_branch(averaged, i, options.x0, options.t, options.h);
    report.branch_values[i] = observable.f(y);
    expectation += q * report.branch_values[i];
  }

  std::vector<double> log_lambda, log_error;
  for (std::size_t k = 0; k < options.lambda_grid.size(); ++k) {
    const SlowFastModel scaled = model.with_lambda(options.lambda_grid[k]);
    const EndpointSimulator simulator(scaled, options.x0, options.v0, options.t, options.h);
    const std::uint64_t seed = derive_seed(options.seed, k);
    std::vector<double> values(options.replicas), paired(options.replicas);
    parallel_replicas(options.replicas, [&](std::size_t r) {
      const CoupledEndpoint end = simulator.run(seed, r);
      values[r] = observable.f(end.x);
      paired[r] = values[r] - report.branch_values[end.frozen_class];
    });
    const SampleStats coupled = sample_stats(values);
    const SampleStats diff = sample_stats(paired);

    WeakErrorRow row;
    row.lambda = options.lambda_grid[k];
    row.coupled_mean = coupled.mean;
    row.coupled_halfwidth = kZ95 * coupled.standard_error();
    row.averaged_expectation = expectation;
    row.plain_error = std::abs(coupled.mean - expectation);
    row.error = std::abs(diff.mean);
    row.error_halfwidth = kZ95 * diff.standard_error();
    row.mc_dominates = row.error_halfwidth > options.dominance_ratio * row.error;
    report.any_mc_dominates = report.any_mc_dominates || row.mc_dominates;
    if (!row.mc_dominates && row.error > 0.0) {
      log_lambda.push_back(std::log(row.lambda));
      log_error.push_back(std::log(row.error));
    }
    report.rows.push_back(row);
  }
  report.slope_points = log_lambda.size();
  if (log_lambda.size() >= 2) report.slope = fit_line(log_lambda, log_error).slope;
  return report;
}

TableReport DecayReport::table() const {
  TableReport t;
  t.name = "fast_decay";
  t.columns = {"lambda", "t", "lambda_t", "tv", "unabsorbed"};
  for (std::size_t k = 0; k < tv.size(); ++k)
    t.rows.push_back({lambdas[k], times[k], lambdas[k] * times[k], tv[k], unabsorbed[k]});
  t.add_summary("c1_hat", c1_hat);
  t.add_summary("K_hat", k_hat);
  t.add_summary("r_squared", r_squared);
  t.add_summary("fit_points", static_cast<double>(fit_points));
  t.add_summary("n_tilde", static_cast<double>(bound.n_tilde));
  t.add_summary("z0", bound.z0);
  t.add_summary("envelope_steps", static_cast<double>(envelope_mass.empty() ? 0 : envelope_mass.size() - 1));
  t.add_summary("envelope_holds", bool_text(envelope_holds));
  return t;
}

TableReport DecayReport::envelope_table() const {
  TableReport t;
  t.name = "absorption_envelope";
  t.columns = {"k", "unabsorbed_mass", "envelope"};
  for (std::size_t k = 0; k < envelope_mass.size(); ++k)
    t.rows.push_back({static_cast<double>(k), envelope_mass[k], envelope_bound[k]});
  t.add_summary("n_tilde", static_cast<double>(bound.n_tilde));
  t.add_summary("z0", bound.z0);
  t.add_summary("envelope_holds", bool_text(envelope_holds));
  return t;
}

DecayReport fast_decay_experiment(const SlowFastModel& model, const FastDecayOptions& options) {
  check_start(model, options.x, options.v0);
  std::vector<double> t_grid = options.t_grid;
  if (t_grid.empty())
    for (int k = 1; k <= 20; ++k) t_grid.push_back(k);
  check_grid(t_grid, "t");
  check_grid(options.lambda_grid, "lambda");

  DecayReport report;
  const FrozenAnalysis frozen = analyze_frozen(model.family(), options.x);
  const Eigen::VectorXd limit = frozen.limit(options.v0).measure;
  const auto& transient = frozen.decomposition.transient;

  std::vector<double> fit_x, fit_y;
  for (double lambda : options.lambda_grid) {
    const double rate = model.with_lambda(lambda).rate();
    for (double t : t_grid) {
      const std::size_t k = poisson_truncation_index(rate * t, options.tail_tol);
      const PoissonizedLaw law =
          poissonize(discrete_law(frozen.matrix, options.v0, k), rate, t, options.tail_tol);
      const double tv = tv_distance(law.law, limit);
      double mass = 0.0;
      for (StateIndex v : transient) mass += law.law(static_cast<Eigen::Index>(v));
      report.lambdas.push_back(lambda);
      report.times.push_back(t);
      report.tv.push_back(tv);
      report.unabsorbed.push_back(mass);
      if (tv > options.fit_floor) {
        fit_x.push_back(lambda * t);
        fit_y.push_back(std::log(tv));
      }
    }
  }
  report.fit_points = fit_x.size();
  if (fit_x.size() >= 2) {
    const LinearFit fit = fit_line(fit_x, fit_y);
    report.c1_hat = -fit.slope;
    report.k_hat = std::exp(fit.intercept);
    report.r_squared = fit.r_squared;
  }

  const Point grid[] = {options.x};
  const AssumptionCertificate cert = certify_assumptions(model.family(), grid, options.certify);
  report.bound = AbsorptionBound{cert.n_tilde, cert.z0};
  for (std::size_t k = 0; k <= options.envelope_steps; ++k) {
    double mass = 0.0;
    if (!transient.empty()) mass = unabsorbed_after(frozen.matrix, frozen.decomposition, k).maxCoeff();
    const double envelope =
        std::pow(cert.z0, static_cast<double>(k / std::max<std::size_t>(1, cert.n_tilde)));
    report.envelope_mass.push_back(mass);
    report.envelope_bound.push_back(envelope);
    if (mass > envelope * (1.0 + 1e-12) + 1e-15) report.envelope_holds = false;
  }
  return report;
}

TableReport SequenceGapReport::table() const {
  TableReport t;
  t.name = "sequence_gap";
  t.columns = {"delta", "gap", "gap_over_delta"};
  for (std::size_t k = 0; k < deltas.size(); ++k) t.rows.push_back({deltas[k], gaps[k], ratios[k]});
  t.add_summary("ball_radius", radius);
  t.add_summary("n_tilde", static_cast<double>(bound.n_tilde));
  t.add_summary("z0", bound.z0);
  t.add_summary("ratio_variation", ratio_variation);
  t.add_summary("linear_coefficient", linear_coefficient);
  for (std::size_t k = 0; k < marginal_lambdas.size(); ++k) {
    const std::string key = "marginal_tv.lambda=" + format_double(marginal_lambdas[k]);
    t.add_summary(key, marginal_tv[k]);
  }
  return t;
}

SequenceGapReport sequence_gap_experiment(const SlowFastModel& model,
                                          const SequenceGapOptions& options) {
  check_start(model, options.x0, options.v0);
  require(!options.deltas.empty(), "delta grid is empty");
  for (double d : options.deltas) require(d >= 0.0 && std::isfinite(d), "deltas must be nonnegative");
  require(options.t > 0.0 && options.lambda > 0.0, "t and lambda must be positive");
  const std::size_t dim = model.dim();
  Point direction = options.direction;
  if (direction.empty()) direction.assign(dim, 1.0 / static_cast<double>(dim));
  if (direction.size() != dim) fail(ErrorCode::DimensionMismatch, "direction has the wrong dimension");
  double norm = 0.0;
  for (double d : direction) norm += std::abs(d);
  require(std::abs(norm - 1.0) < 1e-12, "direction must have 1-norm 1");

  SequenceGapReport report;
  const double delta_max = *std::max_element(options.deltas.begin(), options.deltas.end());
  std::vector<Point> grid{options.x0};
  for (double sign : {-1.0, 1.0}) {
    Point p = options.x0;
    for (std::size_t j = 0; j < dim; ++j) p[j] += sign * delta_max * direction[j];
    grid.push_back(p);
  }
  const AssumptionCertificate cert = certify_assumptions(model.family(), grid, options.certify);
  report.bound = AbsorptionBound{cert.n_tilde, cert.z0};
  report.radius = sequence_ball_radius(report.bound, model.family().lipschitz_bound());

  const SlowFastModel scaled = model.with_lambda(options.lambda);
  const double rate = scaled.rate();
  const std::size_t length = poisson_truncation_index(rate * options.t, options.tail_tol);
  double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0.0;
  double sgd = 0.0, sdd = 0.0;
  for (double delta : options.deltas) {
    if (delta > report.radius) {
      std::ostringstream msg;
      msg << "delta " << delta << " lies outside the ball of radius " << report.radius;
      fail(ErrorCode::BallViolation, msg.str());
    }
    Point offset(dim);
    for (std::size_t j = 0; j < dim; ++j) offset[j] = delta * direction[j];
    const JumpSequence sequence = JumpSequence::constant_offset(options.x0, offset, length);
    const SequenceGap gap = frozen_vs_sequence_gap(model.family(), options.x0, options.v0, sequence,
                                                   rate, options.t, report.bound, options.tail_tol);
    report.deltas.push_back(delta);
    report.gaps.push_back(gap.gap);
    const double ratio = delta > 0.0 ? gap.gap / delta : std::numeric_limits<double>::quiet_NaN();
    report.ratios.push_back(ratio);
    if (delta > 0.0) {
      ratio_min = std::min(ratio_min, ratio);
      ratio_max = std::max(ratio_max, ratio);
    }
    sgd += gap.gap * delta;
    sdd += delta * delta;
  }
  if (ratio_min > 0.0 && std::isfinite(ratio_min)) report.ratio_variation = ratio_max / ratio_min - 1.0;
  else if (ratio_max == 0.0 && std::isfinite(ratio_min)) report.ratio_variation = 0.0;
  report.linear_coefficient = sdd > 0.0 ? sgd / sdd : 0.0;

  const FrozenAnalysis frozen = analyze_frozen(model.family(), options.x0);
  const Eigen::VectorXd limit = frozen.limit(options.v0).measure;
  for (std::size_t k = 0; k < options.marginal_lambdas.size(); ++k) {
    const double lambda = options.marginal_lambdas[k];
    require(lambda > 0.0, "marginal lambdas must be positive");
    require(options.marginal_replicas > 0, "marginal replica count must be positive");
    const SlowFastModel m = model.with_lambda(lambda);
    const EndpointSimulator simulator(m, options.x0, options.v0, 1.0 / std::sqrt(lambda), 0.0);
    const std::uint64_t seed = derive_seed(options.seed, k);
    std::vector<StateIndex> ends(options.marginal_replicas);
    parallel_replicas(ends.size(), [&](std::size_t r) { ends[r] = simulator.run(seed, r).v; });
    Eigen::VectorXd histogram = Eigen::VectorXd::Zero(limit.size());
    for (StateIndex v : ends) histogram(static_cast<Eigen::Index>(v)) += 1.0;
    histogram /= static_cast<double>(ends.size());
    report.marginal_lambdas.push_back(lambda);
    report.marginal_tv.push_back(tv_distance(histogram, limit));
  }
  return report;
}

TableReport PoissonizationReport::table() const {
  TableReport t;
  t.name = "poissonization";
  t.columns = {"t", "lambda", "state", "empirical", "exact", "sigma"};
  for (const auto& r : rows)
    t.rows.push_back({r.t, r.lambda, static_cast<double>(r.state), r.empirical, r.exact, r.sigma});
  t.add_summary("all_within", bool_text(all_within));
  t.add_summary("worst_z", worst_z);
  return t;
}

PoissonizationReport poissonization_check(const SlowFastModel& model,
                                          const PoissonizationOptions& options) {
  check_start(model, options.x, options.v0);
  require(options.replicas > 1, "need more than one replica");
  require(!options.t_lambda.empty(), "no (t, lambda) pairs");
  PoissonizationReport report;
  const StochasticMatrix matrix = model.family().evaluate(options.x);
  const std::size_t n = matrix.size();
  for (std::size_t k = 0; k < options.t_lambda.size(); ++k) {
    const auto [t, lambda] = options.t_lambda[k];
    require(t > 0.0 && lambda > 0.0, "t and lambda must be positive");
    const SlowFastModel m = model.with_lambda(lambda);
    const double tol = 1e-12;
    const std::size_t kmax = poisson_truncation_index(m.rate() * t, tol);
    const PoissonizedLaw exact = poissonize(discrete_law(matrix, options.v0, kmax), m.rate(), t, tol);
    const std::uint64_t seed = derive_seed(options.seed, k);
    std::vector<StateIndex> ends(options.replicas);
    parallel_replicas(ends.size(), [&](std::size_t r) {
      SimulationOptions so;
      so.replica = r;
      ends[r] = simulate_frozen(m, options.x, options.v0, t, seed, so).fast_states.back();
    });
    std::vector<double> counts(n, 0.0);
    for (StateIndex v : ends) counts[v] += 1.0;
    const double M = static_cast<double>(options.replicas);
    for (StateIndex v = 0; v < n; ++v) {
      const double p = exact.law(static_cast<Eigen::Index>(v));
      const double sigma = std::sqrt(std::max(0.0, p * (1.0 - p)) / M);
      const double emp = counts[v] / M;
      const double dev = std::abs(emp - p);
      if (dev > options.sigmas * sigma + 1e-12) report.all_within = false;
      if (sigma > 0.0) report.worst_z = std::max(report.worst_z, dev / sigma);
      report.rows.push_back({t, lambda, v, emp, p, sigma});
    }
  }
  return report;
}

TableReport AbsorptionCheckReport::table() const {
  TableReport t;
  t.name = "absorption_check";
  t.columns = {"state", "exact", "empirical", "sigma"};
  for (std::size_t k = 0; k < states.size(); ++k)
    t.rows.push_back({static_cast<double>(states[k]), exact[k], empirical[k], sigma[k]});
  t.add_summary("class_index", static_cast<double>(class_index));
  t.add_summary("all_within", bool_text(all_within));
  return t;
}

AbsorptionCheckReport absorption_check(const SlowFastModel& model, const Point& x,
                                       std::size_t class_index, std::size_t replicas,
                                       std::uint64_t seed, double sigmas) {
  check_start(model, x, 0);
  require(replicas > 1, "need more than one replica");
  const AbsorptionSampler sampler(model.family(), x);
  const auto& analysis = sampler.analysis();
  if (class_index >= analysis.decomposition.class_count())
    fail(ErrorCode::ClassMissing, "class index out of range");
  AbsorptionCheckReport report;
  report.class_index = class_index;
  const double M = static_cast<double>(replicas);
  for (std::size_t k = 0; k < analysis.decomposition.transient.size(); ++k) {
    const StateIndex v = analysis.decomposition.transient[k];
    const std::uint64_t s = derive_seed(seed, k);
    std::vector<double> hits(replicas);
    parallel_replicas(replicas, [&](std::size_t r) {
      hits[r] = sampler.sample(v, s, r) == class_index ? 1.0 : 0.0;
    });
    const double q = analysis.profile.q(v, class_index);
    const double emp = pairwise_sum(hits) / M;
    const double sigma = std::sqrt(std::max(0.0, q * (1.0 - q)) / M);
    if (std::abs(emp - q) > sigmas * sigma + 1e-12) report.all_within = false;
    report.states.push_back(v);
    report.exact.push_back(q);
    report.empirical.push_back(emp);
    report.sigma.push_back(sigma);
  }
  return report;
}

}  // namespace slowfast
