#include "slowfast/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "slowfast/error.hpp"
#include "slowfast/random.hpp"
#include "slowfast/report.hpp"

namespace slowfast {

DriftField::DriftField(std::size_t dim, Fn fn, double sup_bound, bool x_independent)
    : dim_(dim), fn_(std::move(fn)), sup_bound_(sup_bound), x_independent_(x_independent) {
  require(dim_ > 0, "slow dimension must be positive");
  require(static_cast<bool>(fn_), "drift function is empty");
  require(sup_bound_ >= 0.0 && std::isfinite(sup_bound_), "drift bound must be finite");
}

SlowFastModel::SlowFastModel(std::string description, StateSpace states, DriftField drift,
                             TransitionFamily family, double lambda, double clock_multiplicity)
    : description_(std::move(description)),
      states_(std::move(states)),
      drift_(std::move(drift)),
      family_(std::move(family)),
      lambda_(lambda),
      clock_multiplicity_(clock_multiplicity) {
  if (states_.size() != family_.state_count())
    fail(ErrorCode::DimensionMismatch, "state space and transition family disagree on |chi|");
  if (drift_.dim() != family_.dim())
    fail(ErrorCode::DimensionMismatch, "drift and transition family disagree on N");
  require(lambda_ >= 0.0 && std::isfinite(lambda_), "lambda must be finite and nonnegative");
  require(clock_multiplicity_ > 0.0, "clock multiplicity must be positive");
}

SlowFastModel SlowFastModel::with_lambda(double lambda) const {
  return SlowFastModel(description_, states_, drift_, family_, lambda, clock_multiplicity_);
}

std::uint64_t SlowFastModel::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : description_) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* to_string(FrozenMeasureMode mode) {
  return mode == FrozenMeasureMode::StateDependent ? "state_dependent" : "anchored_at_x0";
}

namespace {

// Classical RK4 for dx = f(x) dt with scratch buffers reused across steps.
class Rk4 {
 public:
  using Field = std::function<void(std::span<const double>, std::span<double>)>;

  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  void step(const Field& f, std::span<double> x, double dt) {
    const std::size_t n = x.size();
    f(x, k1_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = x[j] + 0.5 * dt * k1_[j];
    f(tmp_, k2_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = x[j] + 0.5 * dt * k2_[j];
    f(tmp_, k3_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = x[j] + dt * k3_[j];
    f(tmp_, k4_);
    for (std::size_t j = 0; j < n; ++j)
      x[j] += dt / 6.0 * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
  }

  // Advances x by duration using steps of h, the last one shortened.
  void advance(const Field& f, std::span<double> x, double duration, double h, bool exact) {
    if (duration <= 0.0) return;
    if (exact) {
      step(f, x, duration);
      return;
    }
    const double full = std::floor(duration / h);
    const auto steps = static_cast<std::uint64_t>(full);
    for (std::uint64_t s = 0; s < steps; ++s) step(f, x, h);
    const double rest = duration - full * h;
    if (rest > duration * 1e-14) step(f, x, rest);
  }

 private:
  Point k1_, k2_, k3_, k4_, tmp_;
};

double resolve_step(double h, double t_end) {
  if (h <= 0.0) return t_end / 1e4;
  return h;
}

void validate_run(const SlowFastModel& model, std::span<const double> x0, StateIndex v0,
                  double t_end, const SimulationOptions& options) {
  require(t_end > 0.0 && std::isfinite(t_end), "t_end must be positive and finite");
  if (x0.size() != model.dim())
    fail(ErrorCode::DimensionMismatch, "initial slow state has the wrong dimension");
  require(v0 < model.states().size(), "initial fast state out of range");
  require(options.h >= 0.0, "integrator step must be nonnegative");
  require(options.report_dt >= 0.0, "reporting interval must be nonnegative");
  if (options.report_dt > 0.0) {
    const double h = resolve_step(options.h, t_end);
    const double ratio = options.report_dt / h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
      fail(ErrorCode::InvalidArgument, "integrator step must divide the reporting interval");
  }
  const double expected = model.rate() * t_end;
  if (expected > options.max_expected_jumps) {
    std::ostringstream msg;
    msg << "expected " << expected << " jumps exceeds the limit " << options.max_expected_jumps;
    fail(ErrorCode::ResourceLimit, msg.str());
  }
}

// Shared event loop. jump_row(k, x, v, row) fills the row used at the k-th
// jump (k counted from 1). When slow is true the slow ODE is integrated.
template <class RowAt>
Trajectory run_event_loop(const SlowFastModel& model, const Point& x0, StateIndex v0,
                          double t_end, std::uint64_t seed, const SimulationOptions& options,
                          bool slow, RowAt&& jump_row) {
  const double h = resolve_step(options.h, t_end);
  const DriftField& drift = model.drift();
  RandomStream clock(seed, options.replica, StreamId::Clock);
  RandomStream transitions(seed, options.replica, StreamId::Transitions);

  Trajectory out;
  Point x = x0;
  StateIndex v = v0;
  Rk4 rk4(model.dim());
  const Rk4::Field field = [&](std::span<const double> z, std::span<double> dz) {
    drift.evaluate(z, v, dz);
  };
  auto record = [&](double t, bool jumped) {
    out.times.push_back(t);
    if (slow) out.slow_states.push_back(x);
    out.fast_states.push_back(v);
    out.jumped.push_back(jumped ? 1 : 0);
  };
  double s = 0.0;
  auto integrate_to = [&](double target) {
    if (slow) rk4.advance(field, x, target - s, h, drift.x_independent());
    s = target;
  };

  record(0.0, false);
  std::uint64_t report_index = 1;
  auto next_report = [&] { return static_cast<double>(report_index) * options.report_dt; };
  SparseRow row;
  std::size_t k = 0;
  for (;;) {
    const double next_jump = s + clock.exponential(model.rate());
    const double horizon = std::min(next_jump, t_end);
    if (options.report_dt > 0.0) {
      while (next_report() <= horizon * (1.0 + 1e-15)) {
        const double tr = std::min(next_report(), t_end);
        ++report_index;
        if (tr == next_jump || tr >= t_end) continue;
        integrate_to(tr);
        record(tr, false);
      }
    }
    if (next_jump >= t_end) {
      integrate_to(t_end);
      record(t_end, false);
      break;
    }
    integrate_to(next_jump);
    ++k;
    const double u = transitions.uniform();
    v = sample_row(jump_row(k, x, v, row), u);
    out.jump_times.push_back(next_jump);
    record(next_jump, true);
  }
  return out;
}

}  // namespace

Trajectory simulate_coupled(const SlowFastModel& model, const Point& x0, StateIndex v0,
                            double t_end, std::uint64_t seed, const SimulationOptions& options) {
  validate_run(model, x0, v0, t_end, options);
  const TransitionFamily& family = model.family();
  return run_event_loop(model, x0, v0, t_end, seed, options, true,
                        [&](std::size_t, const Point& x, StateIndex v,
                            SparseRow& row) -> const SparseRow& {
                          family.row(x, v, row);
                          return row;
                        });
}

Trajectory simulate_frozen(const SlowFastModel& model, const Point& x_frozen, StateIndex v0,
                           double t_end, std::uint64_t seed, const SimulationOptions& options) {
  validate_run(model, x_frozen, v0, t_end, options);
  const TransitionFamily& family = model.family();
  std::vector<SparseRow> rows(family.state_count());
  for (StateIndex v = 0; v < rows.size(); ++v) family.row(x_frozen, v, rows[v]);
  return run_event_loop(model, x_frozen, v0, t_end, seed, options, false,
                        [&](std::size_t, const Point&, StateIndex v,
                            SparseRow&) -> const SparseRow& { return rows[v]; });
}

Trajectory simulate_sequence_driven(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                    const JumpSequence& sequence, double t_end,
                                    std::uint64_t seed, const SimulationOptions& options) {
  validate_run(model, x0, v0, t_end, options);
  for (const auto& p : sequence.points())
    if (p.size() != model.dim())
      fail(ErrorCode::DimensionMismatch, "sequence point has the wrong dimension");
  const TransitionFamily& family = model.family();
  return run_event_loop(
      model, x0, v0, t_end, seed, options, false,
      [&](std::size_t k, const Point&, StateIndex v, SparseRow& row) -> const SparseRow& {
        if (k > sequence.size()) {
          std::ostringstream msg;
          msg << "jump " << k << " needs a sequence point, sequence has " << sequence.size();
          fail(ErrorCode::SequenceTooShort, msg.str());
        }
        family.row(sequence.points()[k - 1], v, row);
        return row;
      });
}

AveragedDrift::AveragedDrift(const SlowFastModel& model, const Point& x0, FrozenMeasureMode mode)
    : model_(&model),
      mode_(mode),
      reference_(analyze_frozen(model.family(), x0)),
      laws_fixed_(mode == FrozenMeasureMode::AnchoredAtX0 || model.family().constant_in_x()) {}

ClassStationaryLaw AveragedDrift::class_law(std::size_t class_index,
                                            std::span<const double> z) const {
  if (class_index >= class_count())
    fail(ErrorCode::ClassMissing, "class index out of range");
  if (laws_fixed_) return reference_.laws[class_index];
  const auto& members = reference_.decomposition.classes[class_index];
  const StochasticMatrix p = model_->family().evaluate(z);
  const ChainDecomposition d = decompose(p);
  if (std::find(d.classes.begin(), d.classes.end(), members) == d.classes.end()) {
    std::ostringstream msg;
    msg << "class " << class_index << " of the decomposition at x0 is not a class at z";
    fail(ErrorCode::ClassMissing, msg.str());
  }
  return stationary_law(p, members, class_index, Point(z.begin(), z.end()));
}

void AveragedDrift::evaluate(std::size_t class_index, std::span<const double> z,
                             std::span<double> out) const {
  if (class_index >= class_count())
    fail(ErrorCode::ClassMissing, "class index out of range");
  const auto& members = reference_.decomposition.classes[class_index];
  const DriftField& drift = model_->drift();
  if (members.size() == 1) {
    if (!laws_fixed_) {
      SparseRow row;
      model_->family().row(z, members.front(), row);
      double leave = 0.0;
      for (std::size_t k = 0; k < row.targets.size(); ++k)
        if (row.targets[k] != members.front()) leave += row.probs[k];
      if (leave > 0.0) {
        std::ostringstream msg;
        msg << "class " << class_index << " of the decomposition at x0 is not a class at z";
        fail(ErrorCode::ClassMissing, msg.str());
      }
    }
    drift.evaluate(z, members.front(), out);
    return;
  }
  const ClassStationaryLaw law = class_law(class_index, z);
  Point term(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t m = 0; m < law.members.size(); ++m) {
    drift.evaluate(z, law.members[m], term);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += law.weights(static_cast<Eigen::Index>(m)) * term[j];
  }
}

Point AveragedDrift::evaluate(std::size_t class_index, std::span<const double> z) const {
  Point out(model_->dim());
  evaluate(class_index, z, out);
  return out;
}

bool AveragedDrift::x_independent() const {
  return model_->drift().x_independent() && laws_fixed_;
}

Point integrate_branch(const AveragedDrift& drift, std::size_t class_index, const Point& x0,
                       double t_end, double h) {
  require(t_end >= 0.0, "t_end must be nonnegative");
  if (class_index >= drift.class_count()) fail(ErrorCode::ClassMissing, "class index out of range");
  Point x = x0;
  Rk4 rk4(x.size());
  const Rk4::Field field = [&](std::span<const double> z, std::span<double> dz) {
    drift.evaluate(class_index, z, dz);
  };
  rk4.advance(field, x, t_end, resolve_step(h, t_end), drift.x_independent());
  return x;
}

AveragedRealization simulate_averaged(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                      double t_end, std::uint64_t seed, FrozenMeasureMode mode,
                                      const SimulationOptions& options) {
  validate_run(model, x0, v0, t_end, options);
  const AveragedDrift drift(model, x0, mode);
  RandomStream draw(seed, options.replica, StreamId::ClassDraw);
  const double u = draw.uniform();
  const auto& profile = drift.reference().profile;
  AveragedRealization out;
  const std::size_t classes = drift.class_count();
  double cumulative = 0.0;
  out.zeta = classes - 1;
  for (std::size_t i = 0; i + 1 < classes; ++i) {
    cumulative += profile.q(v0, i);
    if (u < cumulative) {
      out.zeta = i;
      break;
    }
  }

  const double h = resolve_step(options.h, t_end);
  Point x = x0;
  Rk4 rk4(x.size());
  const std::size_t zeta = out.zeta;
  const Rk4::Field field = [&](std::span<const double> z, std::span<double> dz) {
    drift.evaluate(zeta, z, dz);
  };
  Trajectory& path = out.path;
  auto record = [&](double t) {
    path.times.push_back(t);
    path.slow_states.push_back(x);
    path.fast_states.push_back(v0);
    path.jumped.push_back(0);
  };
  record(0.0);
  double s = 0.0;
  if (options.report_dt > 0.0) {
    for (std::uint64_t k = 1;; ++k) {
      const double tr = static_cast<double>(k) * options.report_dt;
      if (tr >= t_end * (1.0 - 1e-15)) break;
      rk4.advance(field, x, tr - s, h, drift.x_independent());
      s = tr;
      record(tr);
    }
  }
  rk4.advance(field, x, t_end - s, h, drift.x_independent());
  record(t_end);
  return out;
}

EndpointSimulator::EndpointSimulator(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                     double t_end, double h)
    : model_(&model),
      x0_(x0),
      v0_(v0),
      t_end_(t_end),
      h_(resolve_step(h, t_end)),
      frozen_(analyze_frozen(model.family(), x0)) {
  validate_run(model, x0, v0, t_end, SimulationOptions{});
  const std::size_t n = model.family().state_count();
  frozen_rows_.resize(n);
  frozen_class_of_.assign(n, -1);
  for (StateIndex v = 0; v < n; ++v) {
    model.family().row(x0, v, frozen_rows_[v]);
    if (const auto c = frozen_.decomposition.class_of(v)) frozen_class_of_[v] = static_cast<int>(*c);
  }
  if (model.family().constant_in_x()) {
    move_rows_.resize(n);
    leave_probability_.assign(n, 0.0);
    for (StateIndex v = 0; v < n; ++v) {
      const SparseRow& row = frozen_rows_[v];
      double off = 0.0;
      for (std::size_t k = 0; k < row.targets.size(); ++k)
        if (row.targets[k] != v) off += row.probs[k];
      leave_probability_[v] = std::min(1.0, off);
      if (off <= 0.0) continue;
      for (std::size_t k = 0; k < row.targets.size(); ++k)
        if (row.targets[k] != v) move_rows_[v].add(row.targets[k], row.probs[k] / off);
    }
  }
}

CoupledEndpoint EndpointSimulator::run_thinned(std::uint64_t seed, std::uint64_t replica) const {
  const DriftField& drift = model_->drift();
  RandomStream clock(seed, replica, StreamId::Clock);
  RandomStream transitions(seed, replica, StreamId::Transitions);
  CoupledEndpoint out;
  Point x = x0_;
  StateIndex v = v0_;
  Rk4 rk4(x.size());
  const Rk4::Field field = [&](std::span<const double> z, std::span<double> dz) {
    drift.evaluate(z, v, dz);
  };
  double s = 0.0;
  for (;;) {
    const double leave_rate = model_->rate() * leave_probability_[v];
    if (leave_rate <= 0.0) break;
    const double next = s + clock.exponential(leave_rate);
    if (next >= t_end_) break;
    rk4.advance(field, x, next - s, h_, drift.x_independent());
    s = next;
    v = sample_row(move_rows_[v], transitions.uniform());
    ++out.jumps;
  }
  rk4.advance(field, x, t_end_ - s, h_, drift.x_independent());
  // The coupled chain is itself a frozen chain at x0; continue it to absorption.
  StateIndex vf = v;
  while (frozen_class_of_[vf] < 0) vf = sample_row(move_rows_[vf], transitions.uniform());
  out.x = std::move(x);
  out.v = v;
  out.frozen_class = static_cast<std::size_t>(frozen_class_of_[vf]);
  return out;
}

CoupledEndpoint EndpointSimulator::run(std::uint64_t seed, std::uint64_t replica) const {
  if (!move_rows_.empty()) return run_thinned(seed, replica);
  const SlowFastModel& model = *model_;
  const TransitionFamily& family = model.family();
  const DriftField& drift = model.drift();
  RandomStream clock(seed, replica, StreamId::Clock);
  RandomStream transitions(seed, replica, StreamId::Transitions);
  CoupledEndpoint out;
  Point x = x0_;
  StateIndex v = v0_;
  StateIndex vf = v0_;
  bool frozen_done = frozen_class_of_[vf] >= 0;
  Rk4 rk4(x.size());
  const Rk4::Field field = [&](std::span<const double> z, std::span<double> dz) {
    drift.evaluate(z, v, dz);
  };
  double s = 0.0;         // current clock time
  double integrated = 0.0;  // time up to which x is current
  SparseRow row;
  for (;;) {
    if (frozen_done && family.is_fixed_absorbing(v)) break;
    const double next = s + clock.exponential(model.rate());
    if (next >= t_end_) break;
    s = next;
    ++out.jumps;
    const double u = transitions.uniform();
    rk4.advance(field, x, s - integrated, h_, drift.x_independent());
    integrated = s;
    family.row(x, v, row);
    v = sample_row(row, u);
    if (!frozen_done) {
      vf = sample_row(frozen_rows_[vf], u);
      frozen_done = frozen_class_of_[vf] >= 0;
    }
  }
  rk4.advance(field, x, t_end_ - integrated, h_, drift.x_independent());
  while (!frozen_done) {
    vf = sample_row(frozen_rows_[vf], transitions.uniform());
    frozen_done = frozen_class_of_[vf] >= 0;
  }
  out.x = std::move(x);
  out.v = v;
  out.frozen_class = static_cast<std::size_t>(frozen_class_of_[vf]);
  return out;
}

AbsorptionSampler::AbsorptionSampler(const TransitionFamily& family, const Point& x)
    : analysis_(analyze_frozen(family, x)) {
  const std::size_t n = family.state_count();
  rows_.resize(n);
  class_of_.assign(n, -1);
  for (StateIndex v = 0; v < n; ++v) {
    family.row(x, v, rows_[v]);
    if (const auto c = analysis_.decomposition.class_of(v)) class_of_[v] = static_cast<int>(*c);
  }
}

std::size_t AbsorptionSampler::sample(StateIndex v0, std::uint64_t seed,
                                      std::uint64_t replica) const {
  require(v0 < rows_.size(), "initial fast state out of range");
  RandomStream transitions(seed, replica, StreamId::Transitions);
  StateIndex v = v0;
  while (class_of_[v] < 0) v = sample_row(rows_[v], transitions.uniform());
  return static_cast<std::size_t>(class_of_[v]);
}

double SampleStats::standard_error() const {
  if (count == 0) return 0.0;
  return std::sqrt(variance / static_cast<double>(count));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats out;
  out.count = values.size();
  if (values.empty()) return out;
  out.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  std::vector<double> squares(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double d = values[k] - out.mean;
    squares[k] = d * d;
  }
  out.variance = pairwise_sum(squares) / static_cast<double>(values.size() - 1);
  return out;
}

void parallel_replicas(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, std::max<std::size_t>(1, count / 256));
  if (workers <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < count; r += workers) body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

SampleStats monte_carlo_coupled(const SlowFastModel& model, const Point& x0, StateIndex v0,
                                double t_end,
                                const std::function<double(std::span<const double>)>& f,
                                std::size_t replicas, std::uint64_t seed, double h) {
  require(replicas > 0, "replica count must be positive");
  const EndpointSimulator simulator(model, x0, v0, t_end, h);
  std::vector<double> values(replicas);
  parallel_replicas(replicas, [&](std::size_t r) { values[r] = f(simulator.run(seed, r).x); });
  return sample_stats(values);
}

void write_trajectory_csv(const std::string& path, const SlowFastModel& model,
                          const Trajectory& trajectory, const std::string& provenance) {
  std::ostringstream out;
  out << comment_block(provenance);
  out << "t";
  for (std::size_t j = 1; j <= model.dim(); ++j) out << ",x_" << j;
  out << ",v_label,jumped\n";
  const bool slow = !trajectory.slow_states.empty();
  for (std::size_t r = 0; r < trajectory.times.size(); ++r) {
    out << format_double(trajectory.times[r]);
    for (std::size_t j = 0; j < model.dim(); ++j)
      out << ',' << (slow ? format_double(trajectory.slow_states[r][j]) : std::string());
    out << ',' << model.states().label(trajectory.fast_states[r]) << ','
        << static_cast<int>(trajectory.jumped[r]) << '\n';
  }
  write_file_atomically(path, out.str());
}

}  // namespace slowfast
