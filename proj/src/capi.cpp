#include "slowfast/slowfast.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "slowfast/acceptance.hpp"
#include "slowfast/error.hpp"
#include "slowfast/harness.hpp"
#include "slowfast/models.hpp"

using namespace slowfast;

struct sf_model {
  SlowFastModel model;
};

struct sf_analysis {
  FrozenAnalysis analysis;
};

struct sf_trajectory {
  Trajectory trajectory;
};

struct sf_report {
  TableReport report;
};

namespace {

thread_local std::string last_error;

sf_status record(sf_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class Fn>
sf_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return SF_OK;
  } catch (const Error& e) {
    return record(static_cast<sf_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return record(SF_ERR_RESOURCE_LIMIT, "ResourceLimit: out of memory");
  } catch (const std::exception& e) {
    return record(SF_ERR_INTERNAL, std::string("Internal: ") + e.what());
  } catch (...) {
    return record(SF_ERR_INTERNAL, "Internal: unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

Point point(const double* x, std::size_t dim) {
  need(x, "point");
  return Point(x, x + dim);
}

SimulationOptions sim_options(const sf_sim_options* o) {
  SimulationOptions s;
  if (!o) return s;
  s.h = o->h;
  s.report_dt = o->report_dt;
  s.max_expected_jumps = o->max_expected_jumps;
  s.replica = o->replica;
  return s;
}

std::vector<double> array(const double* values, std::size_t count) {
  if (count == 0) return {};
  need(values, "array");
  return std::vector<double>(values, values + count);
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "1.0.0"; }

const char* sf_status_name(sf_status status) {
  if (status == SF_OK) return "Ok";
  if (status == SF_ERR_INTERNAL) return "Internal";
  if (status >= 1 && status <= 13) return to_string(static_cast<ErrorCode>(status));
  return "Unknown";
}

const char* sf_last_error(void) { return last_error.c_str(); }

sf_status sf_model_create(const char* name, const char* const* keys, const double* values,
                          size_t count, sf_model** out) {
  return guarded([&] {
    need(name, "model name");
    need(out, "output handle");
    ModelParams params;
    for (size_t k = 0; k < count; ++k) {
      need(keys, "keys");
      need(values, "values");
      need(keys[k], "key");
      params[keys[k]] = values[k];
    }
    static const ModelRegistry registry = ModelRegistry::with_builtins();
    *out = new sf_model{registry.build(name, params)};
  });
}

sf_status sf_model_create_custom(const sf_custom_model* spec, sf_model** out) {
  return guarded([&] {
    need(spec, "model spec");
    need(out, "output handle");
    require(spec->row != nullptr, "row callback must not be null");
    require(spec->drift != nullptr, "drift callback must not be null");
    need(spec->labels, "labels");
    require(spec->state_count > 0, "state count must be positive");
    std::vector<std::string> labels;
    for (size_t v = 0; v < spec->state_count; ++v) {
      need(spec->labels[v], "label");
      labels.emplace_back(spec->labels[v]);
    }
    const sf_row_fn row = spec->row;
    const sf_drift_fn drift = spec->drift;
    void* user = spec->user;
    const size_t n = spec->state_count;
    TransitionFamily family(
        n, spec->dim,
        [row, user, n](std::span<const double> x, StateIndex v, SparseRow& out_row) {
          thread_local std::vector<double> dense;
          dense.assign(n, 0.0);
          row(x.data(), v, dense.data(), user);
          for (StateIndex w = 0; w < n; ++w)
            if (dense[w] > 0.0) out_row.add(w, dense[w]);
        },
        spec->lipschitz_bound, spec->constant_in_x != 0);
    DriftField field(
        spec->dim,
        [drift, user](std::span<const double> x, StateIndex v, std::span<double> a) {
          drift(x.data(), v, a.data(), user);
        },
        spec->drift_bound, spec->drift_x_independent != 0);
    const double multiplicity = spec->clock_multiplicity > 0.0 ? spec->clock_multiplicity : 1.0;
    *out = new sf_model{SlowFastModel(spec->description ? spec->description : "custom",
                                      StateSpace(std::move(labels)), std::move(field),
                                      std::move(family), spec->lambda, multiplicity)};
  });
}

sf_status sf_model_with_lambda(const sf_model* model, double lambda, sf_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    *out = new sf_model{model->model.with_lambda(lambda)};
  });
}

void sf_model_destroy(sf_model* model) { delete model; }

size_t sf_model_dim(const sf_model* model) { return model ? model->model.dim() : 0; }
size_t sf_model_state_count(const sf_model* model) {
  return model ? model->model.states().size() : 0;
}
double sf_model_lambda(const sf_model* model) { return model ? model->model.lambda() : 0.0; }
double sf_model_rate(const sf_model* model) { return model ? model->model.rate() : 0.0; }
uint64_t sf_model_hash(const sf_model* model) { return model ? model->model.hash() : 0; }
const char* sf_model_description(const sf_model* model) {
  return model ? model->model.description().c_str() : "";
}

const char* sf_model_state_label(const sf_model* model, size_t v) {
  if (!model || v >= model->model.states().size()) return nullptr;
  return model->model.states().label(v).c_str();
}

sf_status sf_model_state_index(const sf_model* model, const char* label, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(label, "label");
    need(out, "output");
    *out = model->model.states().index_of(label);
  });
}

sf_status sf_model_transition_matrix(const sf_model* model, const double* x, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output");
    const StochasticMatrix p = model->model.family().evaluate(point(x, model->model.dim()));
    const size_t n = p.size();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) out[i * n + j] = p(i, j);
  });
}

sf_status sf_model_drift(const sf_model* model, const double* x, size_t v, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output");
    require(v < model->model.states().size(), "fast state out of range");
    const Point p = point(x, model->model.dim());
    model->model.drift().evaluate(p, v, std::span<double>(out, model->model.dim()));
  });
}

sf_status sf_analyze(const sf_model* model, const double* x, sf_analysis** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    *out = new sf_analysis{analyze_frozen(model->model.family(), point(x, model->model.dim()))};
  });
}

void sf_analysis_destroy(sf_analysis* analysis) { delete analysis; }

size_t sf_analysis_class_count(const sf_analysis* a) {
  return a ? a->analysis.decomposition.class_count() : 0;
}

size_t sf_analysis_class_size(const sf_analysis* a, size_t i) {
  if (!a || i >= a->analysis.decomposition.class_count()) return 0;
  return a->analysis.decomposition.classes[i].size();
}

sf_status sf_analysis_class_members(const sf_analysis* a, size_t i, size_t* out) {
  return guarded([&] {
    need(a, "analysis");
    need(out, "output");
    if (i >= a->analysis.decomposition.class_count())
      fail(ErrorCode::ClassMissing, "class index out of range");
    const auto& members = a->analysis.decomposition.classes[i];
    std::copy(members.begin(), members.end(), out);
  });
}

size_t sf_analysis_transient_count(const sf_analysis* a) {
  return a ? a->analysis.decomposition.transient.size() : 0;
}

sf_status sf_analysis_transient(const sf_analysis* a, size_t* out) {
  return guarded([&] {
    need(a, "analysis");
    const auto& t = a->analysis.decomposition.transient;
    if (!t.empty()) need(out, "output");
    std::copy(t.begin(), t.end(), out);
  });
}

sf_status sf_analysis_absorption(const sf_analysis* a, size_t v, size_t i, double* out) {
  return guarded([&] {
    need(a, "analysis");
    need(out, "output");
    if (i >= a->analysis.decomposition.class_count())
      fail(ErrorCode::ClassMissing, "class index out of range");
    require(v < a->analysis.matrix.size(), "fast state out of range");
    *out = a->analysis.profile.q(v, i);
  });
}

sf_status sf_analysis_stationary(const sf_analysis* a, size_t i, double* out) {
  return guarded([&] {
    need(a, "analysis");
    need(out, "output");
    if (i >= a->analysis.laws.size()) fail(ErrorCode::ClassMissing, "class index out of range");
    const auto& w = a->analysis.laws[i].weights;
    for (Eigen::Index k = 0; k < w.size(); ++k) out[k] = w(k);
  });
}

sf_status sf_analysis_limit_law(const sf_analysis* a, size_t v, double* out) {
  return guarded([&] {
    need(a, "analysis");
    need(out, "output");
    require(v < a->analysis.matrix.size(), "fast state out of range");
    const Eigen::VectorXd m = a->analysis.limit(v).measure;
    for (Eigen::Index k = 0; k < m.size(); ++k) out[k] = m(k);
  });
}

sf_status sf_certify(const sf_model* model, const double* grid, size_t points, size_t max_steps,
                     double target_z0, sf_certificate* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output");
    require(points > 0, "certificate grid is empty");
    const size_t dim = model->model.dim();
    std::vector<Point> pts;
    for (size_t k = 0; k < points; ++k) pts.push_back(point(grid + k * dim, dim));
    CertifyOptions options;
    options.max_steps = max_steps;
    options.target_z0 = target_z0;
    const AssumptionCertificate c = certify_assumptions(model->model.family(), pts, options);
    out->n_tilde = c.n_tilde;
    out->z0 = c.z0;
    out->lipschitz_estimate = c.lipschitz_estimate;
    out->lipschitz_declared = model->model.family().lipschitz_bound();
    out->classes_stable = c.classes_stable ? 1 : 0;
    out->class_count = c.decomposition.class_count();
    out->transient_count = c.decomposition.transient.size();
  });
}

sf_status sf_poissonized_law(const sf_model* model, const double* x, size_t v0, double t,
                             double tail_tol, double* law, double* tv_to_limit) {
  return guarded([&] {
    need(model, "model");
    const Point p = point(x, model->model.dim());
    const double tol = tail_tol > 0.0 ? tail_tol : 1e-12;
    const FrozenAnalysis frozen = analyze_frozen(model->model.family(), p);
    require(v0 < frozen.matrix.size(), "fast state out of range");
    const double rate = model->model.rate();
    const size_t k = poisson_truncation_index(rate * t, tol);
    const PoissonizedLaw pl = poissonize(discrete_law(frozen.matrix, v0, k), rate, t, tol);
    if (law)
      for (Eigen::Index j = 0; j < pl.law.size(); ++j) law[j] = pl.law(j);
    if (tv_to_limit) *tv_to_limit = tv_distance(pl.law, frozen.limit(v0).measure);
  });
}

sf_sim_options sf_sim_options_default(void) {
  const SimulationOptions s;
  return sf_sim_options{s.h, s.report_dt, s.max_expected_jumps, s.replica};
}

sf_status sf_simulate_coupled(const sf_model* model, const double* x0, size_t v0, double t_end,
                              uint64_t seed, const sf_sim_options* options, sf_trajectory** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    *out = new sf_trajectory{simulate_coupled(model->model, point(x0, model->model.dim()), v0,
                                              t_end, seed, sim_options(options))};
  });
}

sf_status sf_simulate_frozen(const sf_model* model, const double* x_frozen, size_t v0,
                             double t_end, uint64_t seed, const sf_sim_options* options,
                             sf_trajectory** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    *out = new sf_trajectory{simulate_frozen(model->model, point(x_frozen, model->model.dim()), v0,
                                             t_end, seed, sim_options(options))};
  });
}

sf_status sf_simulate_sequence_driven(const sf_model* model, const double* x0, size_t v0,
                                      const double* points, size_t count, double t_end,
                                      uint64_t seed, const sf_sim_options* options,
                                      sf_trajectory** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    const size_t dim = model->model.dim();
    const Point center = point(x0, dim);
    std::vector<Point> pts;
    double radius = 0.0;
    for (size_t k = 0; k < count; ++k) {
      pts.push_back(point(points + k * dim, dim));
      radius = std::max(radius, l1_distance(pts.back(), center));
    }
    const JumpSequence sequence(std::move(pts), center, radius);
    *out = new sf_trajectory{simulate_sequence_driven(model->model, center, v0, sequence, t_end,
                                                      seed, sim_options(options))};
  });
}

sf_status sf_simulate_averaged(const sf_model* model, const double* x0, size_t v0, double t_end,
                               uint64_t seed, sf_frozen_measure_mode mode,
                               const sf_sim_options* options, size_t* zeta, sf_trajectory** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "output handle");
    require(mode == SF_STATE_DEPENDENT || mode == SF_ANCHORED_AT_X0, "unknown frozen measure mode");
    const auto m = mode == SF_STATE_DEPENDENT ? FrozenMeasureMode::StateDependent
                                              : FrozenMeasureMode::AnchoredAtX0;
    AveragedRealization r = simulate_averaged(model->model, point(x0, model->model.dim()), v0,
                                              t_end, seed, m, sim_options(options));
    if (zeta) *zeta = r.zeta;
    *out = new sf_trajectory{std::move(r.path)};
  });
}

void sf_trajectory_destroy(sf_trajectory* t) { delete t; }
size_t sf_trajectory_length(const sf_trajectory* t) { return t ? t->trajectory.times.size() : 0; }
size_t sf_trajectory_jump_count(const sf_trajectory* t) {
  return t ? t->trajectory.jump_count() : 0;
}
int sf_trajectory_has_slow(const sf_trajectory* t) {
  return t && !t->trajectory.slow_states.empty() ? 1 : 0;
}
double sf_trajectory_time(const sf_trajectory* t, size_t row) {
  if (!t || row >= t->trajectory.times.size()) return std::nan("");
  return t->trajectory.times[row];
}
size_t sf_trajectory_fast_state(const sf_trajectory* t, size_t row) {
  if (!t || row >= t->trajectory.fast_states.size()) return static_cast<size_t>(-1);
  return t->trajectory.fast_states[row];
}
int sf_trajectory_jumped(const sf_trajectory* t, size_t row) {
  if (!t || row >= t->trajectory.jumped.size()) return 0;
  return t->trajectory.jumped[row];
}

sf_status sf_trajectory_slow_state(const sf_trajectory* t, size_t row, double* out) {
  return guarded([&] {
    need(t, "trajectory");
    need(out, "output");
    require(!t->trajectory.slow_states.empty(), "trajectory has no slow component");
    require(row < t->trajectory.slow_states.size(), "row out of range");
    const Point& x = t->trajectory.slow_states[row];
    std::copy(x.begin(), x.end(), out);
  });
}

sf_status sf_trajectory_write_csv(const sf_trajectory* t, const sf_model* model, const char* path,
                                  const char* provenance) {
  return guarded([&] {
    need(t, "trajectory");
    need(model, "model");
    need(path, "path");
    write_trajectory_csv(path, model->model, t->trajectory, provenance ? provenance : "");
  });
}

sf_status sf_monte_carlo(const sf_model* model, const double* x0, size_t v0, double t,
                         const char* observable, size_t coordinate, size_t replicas, uint64_t seed,
                         double h, double* mean, double* variance) {
  return guarded([&] {
    need(model, "model");
    need(observable, "observable");
    require(coordinate < model->model.dim(), "observable coordinate out of range");
    const Observable f = make_observable(observable, coordinate);
    const SampleStats s = monte_carlo_coupled(model->model, point(x0, model->model.dim()), v0, t,
                                              f.f, replicas, seed, h);
    if (mean) *mean = s.mean;
    if (variance) *variance = s.variance;
  });
}

sf_weak_error_options sf_weak_error_options_default(void) {
  static const double lambdas[] = {10.0, 1e2, 1e3, 1e4};
  sf_weak_error_options o{};
  o.t = 1.0;
  o.lambdas = lambdas;
  o.lambda_count = 4;
  o.replicas = 100000;
  o.seed = 1;
  o.mode = SF_STATE_DEPENDENT;
  o.observable = "tanh";
  o.dominance_ratio = 0.5;
  return o;
}

sf_status sf_weak_error(const sf_model* model, const sf_weak_error_options* o, sf_report** out) {
  return guarded([&] {
    need(model, "model");
    need(o, "options");
    need(out, "output handle");
    need(o->observable, "observable");
    require(o->coordinate < model->model.dim(), "observable coordinate out of range");
    WeakErrorOptions w;
    w.x0 = point(o->x0, model->model.dim());
    w.v0 = o->v0;
    w.t = o->t;
    w.lambda_grid = array(o->lambdas, o->lambda_count);
    w.replicas = o->replicas;
    w.seed = o->seed;
    w.h = o->h;
    w.mode = o->mode == SF_ANCHORED_AT_X0 ? FrozenMeasureMode::AnchoredAtX0
                                          : FrozenMeasureMode::StateDependent;
    w.dominance_ratio = o->dominance_ratio;
    const WeakErrorReport r =
        weak_error_experiment(model->model, make_observable(o->observable, o->coordinate), w);
    TableReport table = r.table();
    table.add_summary("mode", to_string(w.mode));
    *out = new sf_report{std::move(table)};
  });
}

sf_decay_options sf_decay_options_default(void) {
  sf_decay_options o{};
  o.tail_tol = 1e-12;
  o.envelope_steps = 50;
  o.max_steps = 100;
  o.target_z0 = 1.0;
  return o;
}

sf_status sf_fast_decay(const sf_model* model, const sf_decay_options* o, sf_report** decay,
                        sf_report** envelope) {
  return guarded([&] {
    need(model, "model");
    need(o, "options");
    need(decay, "output handle");
    FastDecayOptions f;
    f.x = point(o->x, model->model.dim());
    f.v0 = o->v0;
    f.t_grid = array(o->times, o->time_count);
    if (o->lambdas) f.lambda_grid = array(o->lambdas, o->lambda_count);
    f.tail_tol = o->tail_tol;
    f.envelope_steps = o->envelope_steps;
    f.certify.max_steps = o->max_steps;
    f.certify.target_z0 = o->target_z0;
    const DecayReport r = fast_decay_experiment(model->model, f);
    auto table = std::make_unique<sf_report>(sf_report{r.table()});
    if (envelope) *envelope = new sf_report{r.envelope_table()};
    *decay = table.release();
  });
}

sf_gap_options sf_gap_options_default(void) {
  static const double deltas[] = {1e-3, 1e-2, 1e-1};
  static const double marginal[] = {1e2, 1e3, 1e4};
  sf_gap_options o{};
  o.deltas = deltas;
  o.delta_count = 3;
  o.t = 1.0;
  o.lambda = 10.0;
  o.marginal_lambdas = marginal;
  o.marginal_count = 3;
  o.marginal_replicas = 10000;
  o.seed = 1;
  return o;
}

sf_status sf_sequence_gap(const sf_model* model, const sf_gap_options* o, sf_report** out) {
  return guarded([&] {
    need(model, "model");
    need(o, "options");
    need(out, "output handle");
    SequenceGapOptions g;
    g.x0 = point(o->x0, model->model.dim());
    g.v0 = o->v0;
    g.deltas = array(o->deltas, o->delta_count);
    g.t = o->t;
    g.lambda = o->lambda;
    if (o->direction) g.direction = point(o->direction, model->model.dim());
    g.marginal_lambdas = array(o->marginal_lambdas, o->marginal_count);
    g.marginal_replicas = o->marginal_replicas;
    g.seed = o->seed;
    *out = new sf_report{sequence_gap_experiment(model->model, g).table()};
  });
}

void sf_report_destroy(sf_report* r) { delete r; }
const char* sf_report_name(const sf_report* r) { return r ? r->report.name.c_str() : ""; }
size_t sf_report_column_count(const sf_report* r) { return r ? r->report.columns.size() : 0; }
const char* sf_report_column(const sf_report* r, size_t c) {
  if (!r || c >= r->report.columns.size()) return nullptr;
  return r->report.columns[c].c_str();
}
size_t sf_report_row_count(const sf_report* r) { return r ? r->report.rows.size() : 0; }
double sf_report_value(const sf_report* r, size_t row, size_t c) {
  if (!r || row >= r->report.rows.size() || c >= r->report.rows[row].size()) return std::nan("");
  return r->report.rows[row][c];
}
size_t sf_report_summary_count(const sf_report* r) { return r ? r->report.summary.size() : 0; }
const char* sf_report_summary_key(const sf_report* r, size_t i) {
  if (!r || i >= r->report.summary.size()) return nullptr;
  return r->report.summary[i].first.c_str();
}
const char* sf_report_summary_value(const sf_report* r, const char* key) {
  if (!r || !key) return nullptr;
  for (const auto& [k, v] : r->report.summary)
    if (k == key) return v.c_str();
  return nullptr;
}

sf_status sf_report_write(const sf_report* r, const char* csv_path, const char* summary_path,
                          const char* provenance) {
  return guarded([&] {
    need(r, "report");
    write_report(r->report, csv_path ? csv_path : "", summary_path ? summary_path : "",
                 provenance ? provenance : "");
  });
}

sf_verify_options sf_verify_options_default(void) {
  const AcceptanceSettings s;
  sf_verify_options o{};
  o.seed = s.seed;
  o.absorption_replicas = s.absorption_replicas;
  o.absorption_sigmas = s.absorption_sigmas;
  o.decay_min_r_squared = s.decay_min_r_squared;
  o.gap_max_variation = s.gap_max_variation;
  o.navigation_beta = s.navigation_beta;
  o.weak_replicas = s.weak_replicas;
  o.slope_threshold = s.slope_threshold;
  o.dominance_ratio = s.dominance_ratio;
  o.ergodic_p = s.ergodic_p;
  o.drift_tolerance = s.drift_tolerance;
  o.poisson_replicas = s.poisson_replicas;
  o.poisson_sigmas = s.poisson_sigmas;
  return o;
}

sf_status sf_verify(const sf_verify_options* o, const char* report_path, const char* provenance,
                    sf_verify_progress progress, void* user, int* all_passed) {
  return guarded([&] {
    need(o, "options");
    AcceptanceSettings s;
    s.seed = o->seed;
    if (o->criteria_count > 0) {
      need(o->criteria, "criteria");
      s.criteria.assign(o->criteria, o->criteria + o->criteria_count);
    }
    s.absorption_replicas = o->absorption_replicas;
    s.absorption_sigmas = o->absorption_sigmas;
    s.decay_min_r_squared = o->decay_min_r_squared;
    s.gap_max_variation = o->gap_max_variation;
    s.navigation_beta = o->navigation_beta;
    s.weak_replicas = o->weak_replicas;
    s.slope_threshold = o->slope_threshold;
    s.dominance_ratio = o->dominance_ratio;
    s.ergodic_p = o->ergodic_p;
    s.drift_tolerance = o->drift_tolerance;
    s.poisson_replicas = o->poisson_replicas;
    s.poisson_sigmas = o->poisson_sigmas;
    const AcceptanceResult result = run_acceptance(s, [&](const CriterionResult& r) {
      if (progress) progress(r.id, r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), r.seconds, user);
    });
    if (report_path)
      write_file_atomically(report_path, comment_block(provenance ? provenance : "") +
                                             acceptance_report(result, s));
    if (all_passed) *all_passed = result.all_passed() ? 1 : 0;
  });
}

sf_status sf_write_file(const char* path, const char* contents) {
  return guarded([&] {
    need(path, "path");
    need(contents, "contents");
    write_file_atomically(path, contents);
  });
}

}  // extern "C"
