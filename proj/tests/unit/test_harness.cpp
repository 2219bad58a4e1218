#include <catch_amalgamated.hpp>

#include <cmath>

#include "slowfast/error.hpp"
#include "slowfast/harness.hpp"
#include "slowfast/models.hpp"

using namespace slowfast;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{2, -1, -4, -7};
  const auto fit = fit_line(x, y);
  CHECK_THAT(fit.intercept, WithinAbs(2.0, 1e-14));
  CHECK_THAT(fit.slope, WithinAbs(-3.0, 1e-14));
  CHECK_THAT(fit.r_squared, WithinAbs(1.0, 1e-14));
}

TEST_CASE("observable catalog") {
  const Point x{0.5, -2.0};
  CHECK(make_observable("coordinate", 1).f(x) == -2.0);
  CHECK(make_observable("tanh", 0).f(x) == std::tanh(0.5));
  CHECK_THAT(make_observable("bump").f(x), WithinAbs(std::exp(-4.25 / 2.0), 1e-15));
  CHECK(observable_catalog().size() == 3);
  CHECK_THROWS_AS(make_observable("cosine"), Error);
}

TEST_CASE("weak error of the toy model decays like sech^2(1) / lambda") {
  const auto model = build_toy({2, 1.0, 0.5});
  WeakErrorOptions o;
  o.x0 = {0.0, 0.0};
  o.v0 = model.states().index_of("+-");
  o.lambda_grid = {10.0, 100.0, 1000.0};
  o.replicas = 20000;
  o.seed = 12;
  const auto report = weak_error_experiment(model, make_observable("tanh", 0), o);
  REQUIRE(report.rows.size() == 3);
  const double sech2 = 1.0 / std::pow(std::cosh(1.0), 2);
  CHECK_THAT(report.rows[2].error, WithinRel(sech2 / 1000.0, 0.1));
  CHECK(report.slope < -0.9);
  CHECK(report.slope > -1.2);
  CHECK(report.decreasing_up_to_overlap());
  CHECK_THAT(report.rows[0].averaged_expectation, WithinAbs(0.0, 1e-15));
  CHECK_THAT(report.branch_probabilities[0], WithinAbs(0.5, 1e-15));
  for (const auto& row : report.rows) CHECK(row.error_halfwidth < row.coupled_halfwidth);
  const auto table = report.table();
  CHECK(table.rows.size() == 3);
  CHECK(table.summary_value("mc_error_dominates") == "false");
}

TEST_CASE("weak error flags rows dominated by Monte Carlo noise") {
  const auto model = build_toy({2, 1.0, 0.5});
  WeakErrorOptions o;
  o.x0 = {0.0, 0.0};
  o.v0 = model.states().index_of("+-");
  o.lambda_grid = {1e5};
  o.replicas = 1000;
  o.dominance_ratio = 1e-6;
  const auto report = weak_error_experiment(model, make_observable("tanh", 0), o);
  CHECK(report.any_mc_dominates);
  CHECK(std::isnan(report.slope));
}

TEST_CASE("weak error requires enough replicas") {
  const auto model = build_toy({2, 1.0, 0.5});
  WeakErrorOptions o;
  o.x0 = {0.0, 0.0};
  o.replicas = 999;
  CHECK_THROWS_AS(weak_error_experiment(model, make_observable("tanh", 0), o), Error);
}

TEST_CASE("weak error results are reproducible") {
  const auto model = build_coupled_navigation({2, 1.0, 2.0});
  WeakErrorOptions o;
  o.x0 = {0.0, 0.0};
  o.v0 = 1;
  o.lambda_grid = {10.0, 50.0};
  o.replicas = 2000;
  const auto a = weak_error_experiment(model, make_observable("tanh", 0), o);
  const auto b = weak_error_experiment(model, make_observable("tanh", 0), o);
  CHECK(to_csv(a.table()) == to_csv(b.table()));
}

TEST_CASE("decreasing up to overlap") {
  WeakErrorReport r;
  r.rows.resize(3);
  r.rows[0].error = 1.0;
  r.rows[1].error = 0.5;
  r.rows[2].error = 0.55;
  r.rows[1].error_halfwidth = 0.01;
  r.rows[2].error_halfwidth = 0.01;
  CHECK(!r.decreasing_up_to_overlap());
  r.rows[2].error_halfwidth = 0.05;
  CHECK(r.decreasing_up_to_overlap());
}

TEST_CASE("toy decay rate and geometric envelope") {
  const auto model = build_toy({2, 1.0, 0.5});
  FastDecayOptions o;
  o.x = {0.0, 0.0};
  o.v0 = model.states().index_of("+-");
  const auto report = fast_decay_experiment(model, o);
  CHECK_THAT(report.c1_hat, WithinRel(1.0, 1e-6));
  CHECK_THAT(report.k_hat, WithinRel(2.0, 1e-6));
  CHECK(report.r_squared > 0.999);
  CHECK(report.bound.n_tilde == 1);
  CHECK(report.envelope_holds);
  CHECK(report.envelope_mass.size() == 51);
  for (std::size_t k = 0; k < report.envelope_mass.size(); ++k)
    CHECK(report.envelope_mass[k] <= report.envelope_bound[k] * (1 + 1e-12));
  CHECK(report.envelope_table().rows.size() == 51);
}

TEST_CASE("decay fit across several lambdas depends only on lambda t") {
  const auto model = build_toy({3, 1.0, 0.5});
  FastDecayOptions o;
  o.x = {0.0, 0.0, 0.0};
  o.v0 = 1;
  o.t_grid = {1.0, 2.0, 4.0};
  o.lambda_grid = {1.0, 2.0};
  const auto report = fast_decay_experiment(model, o);
  REQUIRE(report.tv.size() == 6);
  // (t, lambda) = (2, 1) and (1, 2) share lambda t
  CHECK_THAT(report.tv[1], WithinRel(report.tv[3], 1e-12));
  CHECK(report.c1_hat > 0.0);
}

TEST_CASE("sequence gap is linear in the offset on the navigation model") {
  const auto model = build_coupled_navigation({2, 1.0, 2.0});
  SequenceGapOptions o;
  o.x0 = {0.3, -0.2};
  o.v0 = model.states().index_of("+-");
  o.marginal_lambdas = {};
  const auto report = sequence_gap_experiment(model, o);
  CHECK(report.ratio_variation < 0.5);
  CHECK(report.radius > 0.1);
  CHECK(report.linear_coefficient > 0.0);
  o.deltas = {10.0};
  CHECK_THROWS_AS(sequence_gap_experiment(model, o), Error);
}

TEST_CASE("sequence gap vanishes for a decoupled family") {
  const auto model = build_toy({2, 1.0, 0.5});
  SequenceGapOptions o;
  o.x0 = {0.0, 0.0};
  o.v0 = 1;
  o.marginal_lambdas = {};
  const auto report = sequence_gap_experiment(model, o);
  for (double g : report.gaps) CHECK(g == 0.0);
  CHECK(std::isinf(report.radius));
}

TEST_CASE("coupled marginal approaches the frozen law") {
  const auto model = build_coupled_navigation({2, 1.0, 2.0});
  SequenceGapOptions o;
  o.x0 = {0.3, -0.2};
  o.v0 = 1;
  o.deltas = {1e-2};
  o.marginal_lambdas = {1e2, 1e4};
  o.marginal_replicas = 20000;
  const auto report = sequence_gap_experiment(model, o);
  REQUIRE(report.marginal_tv.size() == 2);
  CHECK(report.marginal_tv[1] < 0.05);
}

TEST_CASE("poissonization check on the frozen toy chain") {
  const auto model = build_toy({3, 1.0, 0.5});
  PoissonizationOptions o;
  o.x = {0.0, 0.0, 0.0};
  o.v0 = model.states().index_of("++-");
  o.replicas = 20000;
  const auto report = poissonization_check(model, o);
  CHECK(report.rows.size() == 24);
  CHECK(report.all_within);
}

TEST_CASE("absorption check on the toy chain") {
  const auto model = build_toy({3, 1.0, 0.5});
  const auto report = absorption_check(model, {0, 0, 0}, 1, 20000, 3);
  CHECK(report.states.size() == 6);
  CHECK(report.all_within);
}

TEST_CASE("the fitted decay rate does not depend on the transient start") {
  const auto model = build_toy({3, 1.0, 0.5});
  FastDecayOptions o;
  o.x = {0.0, 0.0, 0.0};
  o.v0 = model.states().index_of("++-");
  const auto a = fast_decay_experiment(model, o);
  o.v0 = model.states().index_of("+--");
  const auto b = fast_decay_experiment(model, o);
  CHECK(a.c1_hat > 0.0);
  CHECK(std::abs(a.c1_hat / b.c1_hat - 1.0) < 0.1);
}

TEST_CASE("an empty lambda grid is rejected") {
  const auto model = build_toy({2, 1.0, 0.5});
  WeakErrorOptions o;
  o.x0 = {0.0, 0.0};
  o.lambda_grid = {};
  CHECK_THROWS_AS(weak_error_experiment(model, make_observable("tanh", 0), o), Error);
}
