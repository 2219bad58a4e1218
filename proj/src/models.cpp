#include "slowfast/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/report.hpp"

namespace slowfast {

namespace {

bool bit_is_minus(unsigned index, int n, int j) { return (index >> (n - 1 - j)) & 1U; }

unsigned flip(unsigned index, int n, int j) { return index ^ (1U << (n - 1 - j)); }

// Sorts by target and merges repeated targets.
void finalize(SparseRow& row) {
  std::vector<std::size_t> order(row.targets.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return row.targets[a] < row.targets[b]; });
  SparseRow merged;
  for (std::size_t k : order) {
    if (row.probs[k] <= 0.0) continue;
    if (!merged.targets.empty() && merged.targets.back() == row.targets[k])
      merged.probs.back() += row.probs[k];
    else
      merged.add(row.targets[k], row.probs[k]);
  }
  row = std::move(merged);
}

std::vector<std::string> heading_labels(int n) {
  std::vector<std::string> labels;
  for (unsigned k = 0; k < (1U << n); ++k) labels.push_back(heading_label(k, n));
  return labels;
}

DriftField heading_drift(int n) {
  return DriftField(
      static_cast<std::size_t>(n),
      [n](std::span<const double>, StateIndex v, std::span<double> out) {
        for (int j = 0; j < n; ++j) out[j] = bit_is_minus(static_cast<unsigned>(v), n, j) ? -1.0 : 1.0;
      },
      1.0, true);
}

void check_particles(int n, int max_n) {
  if (n < 1 || n > max_n) {
    std::ostringstream msg;
    msg << "n must lie in [1, " << max_n << "], got " << n;
    fail(ErrorCode::InvalidArgument, msg.str());
  }
}

void check_lambda(double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and nonnegative");
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string heading_label(unsigned index, int n) {
  std::string label(static_cast<std::size_t>(n), '+');
  for (int j = 0; j < n; ++j)
    if (bit_is_minus(index, n, j)) label[static_cast<std::size_t>(j)] = '-';
  return label;
}

std::vector<double> heading_vector(unsigned index, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = bit_is_minus(index, n, j) ? -1.0 : 1.0;
  return v;
}

SlowFastModel build_toy(const ToyParams& params) {
  const int n = params.n;
  check_particles(n, 10);
  check_lambda(params.lambda);
  const double a = params.acceptance;
  require(a > 0.0 && a <= 1.0, "acceptance must lie in (0, 1]");
  const unsigned last = (1U << n) - 1;
  auto row_fn = [n, a, last](std::span<const double>, StateIndex v, SparseRow& out) {
    const auto index = static_cast<unsigned>(v);
    if (index == 0 || index == last) {
      out.add(v, 1.0);
      return;
    }
    for (int j = 0; j < n; ++j) out.add(flip(index, n, j), a / n);
    out.add(v, 1.0 - a);
    finalize(out);
  };
  TransitionFamily family(std::size_t{1} << n, static_cast<std::size_t>(n), row_fn, 0.0, true,
                          {0, last});
  std::ostringstream d;
  d << "toy n=" << n << " lambda=" << format_double(params.lambda)
    << " acceptance=" << format_double(a);
  return SlowFastModel(d.str(), StateSpace(heading_labels(n)), heading_drift(n), std::move(family),
                       params.lambda, n);
}

double navigation_lipschitz_bound(int n, double beta) { return beta / (2.0 * n); }

SlowFastModel build_coupled_navigation(const NavigationParams& params) {
  const int n = params.n;
  check_particles(n, 8);
  check_lambda(params.lambda);
  const double beta = params.beta;
  require(beta >= 0.0 && std::isfinite(beta), "beta must be finite and nonnegative");
  require(!std::isnan(params.compromise_below), "compromise_below must be a number");
  const double threshold = params.compromise_below;
  const unsigned last = (1U << n) - 1;
  auto row_fn = [n, beta, threshold, last](std::span<const double> x, StateIndex v,
                                           SparseRow& out) {
    const auto index = static_cast<unsigned>(v);
    if ((index == 0 || index == last) && !(x[0] < threshold)) {
      out.add(v, 1.0);
      return;
    }
    double moved = 0.0;
    for (int j = 0; j < n; ++j) {
      const double h = bit_is_minus(index, n, j) ? 1.0 : -1.0;  // heading after the flip
      const double p = logistic(beta * x[static_cast<std::size_t>(j)] * h) / n;
      out.add(flip(index, n, j), p);
      moved += p;
    }
    out.add(v, 1.0 - moved);
    finalize(out);
  };
  const bool stable = std::isinf(threshold) && threshold < 0;
  std::vector<StateIndex> absorbing;
  if (stable) absorbing = {0, last};
  TransitionFamily family(std::size_t{1} << n, static_cast<std::size_t>(n), row_fn,
                          navigation_lipschitz_bound(n, beta), beta == 0.0 && stable,
                          std::move(absorbing));
  std::ostringstream d;
  d << "coupled_navigation n=" << n << " lambda=" << format_double(params.lambda)
    << " beta=" << format_double(beta);
  if (!stable) d << " compromise_below=" << format_double(threshold);
  return SlowFastModel(d.str(), StateSpace(heading_labels(n)), heading_drift(n), std::move(family),
                       params.lambda, n);
}

SlowFastModel build_ergodic_class_variant(const ErgodicVariantParams& params) {
  const int n = params.n;
  check_particles(n, 10);
  check_lambda(params.lambda);
  const double p = params.p;
  const double a = params.acceptance;
  require(p > 0.0 && p < 1.0, "intra-class mixing p must lie in (0, 1)");
  require(a > 0.0 && a <= 1.0, "acceptance must lie in (0, 1]");
  require(std::isfinite(params.drift_a) && std::isfinite(params.drift_b),
          "class drifts must be finite");
  const unsigned last = (1U << n) - 1;
  const std::size_t count = (std::size_t{1} << n) + 2;
  // Heading index h maps to state h + 1 for mixed headings; +e owns states
  // 0, 1 and -e owns states count - 2, count - 1.
  const StateIndex plus_a = 0, plus_b = 1, minus_a = count - 2, minus_b = count - 1;

  std::vector<std::string> labels(count);
  const std::string plus = heading_label(0, n), minus = heading_label(last, n);
  labels[plus_a] = plus + ":a";
  labels[plus_b] = plus + ":b";
  labels[minus_a] = minus + ":a";
  labels[minus_b] = minus + ":b";
  for (unsigned h = 1; h < last; ++h) labels[h + 1] = heading_label(h, n);

  auto row_fn = [=](std::span<const double>, StateIndex v, SparseRow& out) {
    if (v == plus_a || v == minus_a) {
      out.add(v, 1.0 - p);
      out.add(v + 1, p);
      return;
    }
    if (v == plus_b || v == minus_b) {
      out.add(v - 1, 1.0 - p);
      out.add(v, p);
      return;
    }
    const auto index = static_cast<unsigned>(v - 1);
    for (int j = 0; j < n; ++j) {
      const unsigned target = flip(index, n, j);
      const double q = a / n;
      if (target == 0) {
        out.add(plus_a, q / 2);
        out.add(plus_b, q / 2);
      } else if (target == last) {
        out.add(minus_a, q / 2);
        out.add(minus_b, q / 2);
      } else {
        out.add(target + 1, q);
      }
    }
    out.add(v, 1.0 - a);
    finalize(out);
  };
  const double da = params.drift_a, db = params.drift_b;
  DriftField drift(
      static_cast<std::size_t>(n),
      [=](std::span<const double>, StateIndex v, std::span<double> out) {
        double speed = 1.0;
        unsigned heading = 0;
        if (v == plus_a || v == plus_b) {
          speed = v == plus_a ? da : db;
        } else if (v == minus_a || v == minus_b) {
          speed = v == minus_a ? da : db;
          heading = last;
        } else {
          heading = static_cast<unsigned>(v - 1);
        }
        for (int j = 0; j < n; ++j) out[j] = speed * (bit_is_minus(heading, n, j) ? -1.0 : 1.0);
      },
      std::max({1.0, std::abs(da), std::abs(db)}), true);
  TransitionFamily family(count, static_cast<std::size_t>(n), row_fn, 0.0, true);
  std::ostringstream d;
  d << "ergodic_variant n=" << n << " lambda=" << format_double(params.lambda)
    << " p=" << format_double(p) << " acceptance=" << format_double(a)
    << " drift_a=" << format_double(da) << " drift_b=" << format_double(db);
  return SlowFastModel(d.str(), StateSpace(std::move(labels)), std::move(drift), std::move(family),
                       params.lambda, n);
}

namespace {

int integer_param(const ModelParams& params, const std::string& key, int fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double value = it->second;
  if (!(std::floor(value) == value) || std::abs(value) > 1e6)
    fail(ErrorCode::InvalidArgument, "parameter '" + key + "' must be an integer");
  return static_cast<int>(value);
}

double real_param(const ModelParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

ModelRegistry ModelRegistry::with_builtins() {
  ModelRegistry registry;
  registry.add("toy", {"n", "lambda", "acceptance"}, [](const ModelParams& p) {
    ToyParams t;
    t.n = integer_param(p, "n", t.n);
    t.lambda = real_param(p, "lambda", t.lambda);
    t.acceptance = real_param(p, "acceptance", t.acceptance);
    return build_toy(t);
  });
  registry.add("coupled_navigation", {"n", "lambda", "beta", "compromise_below"},
               [](const ModelParams& p) {
                 NavigationParams t;
                 t.n = integer_param(p, "n", t.n);
                 t.lambda = real_param(p, "lambda", t.lambda);
                 t.beta = real_param(p, "beta", t.beta);
                 t.compromise_below = real_param(p, "compromise_below", t.compromise_below);
                 return build_coupled_navigation(t);
               });
  registry.add("ergodic_variant", {"n", "lambda", "p", "acceptance", "drift_a", "drift_b"},
               [](const ModelParams& p) {
                 ErgodicVariantParams t;
                 t.n = integer_param(p, "n", t.n);
                 t.lambda = real_param(p, "lambda", t.lambda);
                 t.p = real_param(p, "p", t.p);
                 t.acceptance = real_param(p, "acceptance", t.acceptance);
                 t.drift_a = real_param(p, "drift_a", t.drift_a);
                 t.drift_b = real_param(p, "drift_b", t.drift_b);
                 return build_ergodic_class_variant(t);
               });
  return registry;
}

void ModelRegistry::add(const std::string& name, std::vector<std::string> parameter_names,
                        Builder builder) {
  require(!name.empty(), "model name must not be empty");
  require(static_cast<bool>(builder), "model builder is empty");
  entries_[name] = Entry{std::move(parameter_names), std::move(builder)};
}

bool ModelRegistry::contains(const std::string& name) const { return entries_.count(name) != 0; }

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

const std::vector<std::string>& ModelRegistry::parameters(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorCode::InvalidArgument, "unknown model '" + name + "'");
  return it->second.parameters;
}

SlowFastModel ModelRegistry::build(const std::string& name, const ModelParams& params) const {
  const auto& allowed = parameters(name);
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(ErrorCode::InvalidArgument, "model '" + name + "' has no parameter '" + key + "'");
  }
  return entries_.at(name).builder(params);
}

}  // namespace slowfast
