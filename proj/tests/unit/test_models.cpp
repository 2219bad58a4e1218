#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "slowfast/error.hpp"
#include "slowfast/models.hpp"

using namespace slowfast;
using Catch::Matchers::WithinAbs;

namespace {

ErrorCode code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

double row_distance(const StochasticMatrix& a, const StochasticMatrix& b) {
  double worst = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v)
    worst = std::max(worst, (a.entries().row(v) - b.entries().row(v)).lpNorm<1>());
  return worst;
}

}  // namespace

TEST_CASE("heading labels are lexicographic with plus first") {
  CHECK(heading_label(0, 3) == "+++");
  CHECK(heading_label(1, 3) == "++-");
  CHECK(heading_label(4, 3) == "-++");
  CHECK(heading_label(7, 3) == "---");
  CHECK(heading_vector(5, 3) == std::vector<double>{-1.0, 1.0, -1.0});
}

TEST_CASE("toy model structure") {
  const auto model = build_toy({3, 2.0, 0.5});
  CHECK(model.dim() == 3);
  CHECK(model.states().size() == 8);
  CHECK(model.rate() == 6.0);
  CHECK(model.family().constant_in_x());
  CHECK(model.family().fixed_absorbing() == std::vector<StateIndex>{0, 7});
  const auto p = model.family().evaluate(Point{0, 0, 0});
  const StateIndex v = model.states().index_of("+-+");
  CHECK_THAT(p(v, v), WithinAbs(0.5, 1e-15));
  CHECK_THAT(p(v, model.states().index_of("--+")), WithinAbs(1.0 / 6.0, 1e-15));
  CHECK_THAT(p(v, model.states().index_of("+++")), WithinAbs(1.0 / 6.0, 1e-15));
  Point a(3);
  model.drift().evaluate(Point{0, 0, 0}, v, a);
  CHECK(a == Point{1.0, -1.0, 1.0});
}

TEST_CASE("toy parameters are checked") {
  CHECK(code_of([] { build_toy({0, 1.0, 0.5}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_toy({11, 1.0, 0.5}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_toy({2, 1.0, 1.5}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { build_toy({2, -1.0, 0.5}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("a single particle has two absorbing states and no transients") {
  const auto model = build_toy({1, 1.0, 0.5});
  const auto analysis = analyze_frozen(model.family(), Point{0.0});
  CHECK(analysis.decomposition.class_count() == 2);
  CHECK(analysis.decomposition.transient.empty());
}

TEST_CASE("navigation with beta zero is the toy model with acceptance one half") {
  const auto nav = build_coupled_navigation({3, 1.0, 0.0});
  const auto toy = build_toy({3, 1.0, 0.5});
  const Point x{0.4, -0.1, 0.9};
  CHECK(row_distance(nav.family().evaluate(x), toy.family().evaluate(x)) < 1e-15);
  CHECK(nav.family().constant_in_x());
}

TEST_CASE("navigation rows are Lipschitz with the declared bound") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n : {1, 2, 3}) {
    for (double beta : {0.5, 2.0, 5.0}) {
      const auto model = build_coupled_navigation({n, 1.0, beta});
      CHECK_THAT(model.family().lipschitz_bound(), WithinAbs(beta / (2.0 * n), 1e-15));
      for (int trial = 0; trial < 50; ++trial) {
        Point x(n), y(n);
        for (int j = 0; j < n; ++j) {
          x[j] = u(rng);
          y[j] = u(rng);
        }
        double dist = 0.0;
        for (int j = 0; j < n; ++j) dist += std::abs(x[j] - y[j]);
        CHECK(row_distance(model.family().evaluate(x), model.family().evaluate(y)) <=
              model.family().lipschitz_bound() * dist + 1e-12);
      }
    }
  }
}

TEST_CASE("navigation particles are pulled toward the target on their side") {
  const auto model = build_coupled_navigation({2, 1.0, 3.0});
  const auto p = model.family().evaluate(Point{0.8, 0.0});
  const StateIndex from = model.states().index_of("-+");
  // particle 1 heads away from its side; switching to + is likely
  CHECK(p(from, model.states().index_of("++")) > 0.25);
  const StateIndex back = model.states().index_of("+-");
  CHECK(p(back, model.states().index_of("--")) < 0.25);
}

TEST_CASE("compromise threshold breaks consensus absorption") {
  const auto model = build_coupled_navigation({2, 1.0, 1.0, -0.5});
  CHECK(!model.family().constant_in_x());
  CHECK(model.family().fixed_absorbing().empty());
  CHECK(decompose(model.family().evaluate(Point{0.0, 0.0})).class_count() == 2);
  CHECK(decompose(model.family().evaluate(Point{-1.0, 0.0})).class_count() == 1);
}

TEST_CASE("ergodic variant structure") {
  const auto model = build_ergodic_class_variant({2, 1.0, 0.3, 0.5, 1.5, 0.5});
  CHECK(model.states().size() == 6);
  CHECK(model.states().label(0) == "++:a");
  CHECK(model.states().label(5) == "--:b");
  const auto analysis = analyze_frozen(model.family(), Point{0.0, 0.0});
  REQUIRE(analysis.decomposition.class_count() == 2);
  CHECK(analysis.decomposition.classes[0] == std::vector<StateIndex>{0, 1});
  CHECK_THAT(analysis.laws[0].weights(0), WithinAbs(0.7, 1e-14));
  CHECK_THAT(analysis.laws[0].weights(1), WithinAbs(0.3, 1e-14));
  Point a(2);
  model.drift().evaluate(Point{0, 0}, 4, a);
  CHECK(a == Point{-1.5, -1.5});
}

TEST_CASE("registry builds models by name") {
  const auto registry = ModelRegistry::with_builtins();
  CHECK(registry.contains("toy"));
  CHECK(registry.names().size() == 3);
  const auto model = registry.build("toy", {{"n", 3}, {"lambda", 4}});
  CHECK(model.rate() == 12.0);
  CHECK(code_of([&] { registry.build("nope", {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { registry.build("toy", {{"bogus", 1}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { registry.build("toy", {{"n", 2.5}}); }) == ErrorCode::InvalidArgument);
  const auto nav = registry.build("coupled_navigation", {{"beta", 2}, {"compromise_below", -0.5}});
  CHECK(nav.description().find("compromise_below") != std::string::npos);
}
