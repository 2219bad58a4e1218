#include <catch_amalgamated.hpp>

#include <cmath>

#include "slowfast/error.hpp"
#include "slowfast/law_oracle.hpp"
#include "slowfast/models.hpp"

using namespace slowfast;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

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

}  // namespace

TEST_CASE("discrete law of the toy chain after one jump") {
  const auto model = build_toy({2, 1.0, 0.5});
  const auto p = model.family().evaluate(Point{0.0, 0.0});
  const auto traj = discrete_law(p, model.states().index_of("+-"), 3);
  REQUIRE(traj.k_max() == 3);
  const Eigen::Vector4d one{0.25, 0.5, 0.0, 0.25};
  CHECK((traj.laws[1] - one).lpNorm<1>() < 1e-15);
  const Eigen::Vector4d three{0.4375, 0.125, 0.0, 0.4375};
  CHECK((traj.laws[3] - three).lpNorm<1>() < 1e-15);
}

TEST_CASE("laws stay probability vectors") {
  const auto model = build_coupled_navigation({3, 1.0, 2.0});
  const auto p = model.family().evaluate(Point{0.3, -0.7, 0.1});
  const auto traj = discrete_law(p, 2, 40);
  for (const auto& law : traj.laws) {
    CHECK_THAT(law.sum(), WithinAbs(1.0, 1e-13));
    CHECK(law.minCoeff() >= 0.0);
  }
}

TEST_CASE("poisson truncation index covers the requested tail") {
  CHECK(poisson_truncation_index(0.0, 1e-12) == 0);
  const std::size_t k = poisson_truncation_index(10.0, 1e-12);
  // P[Poisson(10) > 30] is about 7.1e-8 and P[> 40] about 1.2e-12.
  CHECK(k > 30);
  CHECK(k < 50);
  CHECK(poisson_truncation_index(10.0, 1e-6) < k);
}

TEST_CASE("poissonized toy law keeps mass exp(-rate t / 2) on the mixed state") {
  const auto model = build_toy({2, 1.0, 0.5});
  const auto p = model.family().evaluate(Point{0.0, 0.0});
  const StateIndex v0 = model.states().index_of("+-");
  const double rate = model.rate();  // 2
  const double t = 1.5;
  const auto traj = discrete_law(p, v0, 200);
  const auto law = poissonize(traj, rate, t);
  CHECK_THAT(law.law(v0), WithinRel(std::exp(-1.5), 1e-12));
  CHECK_THAT(law.law.sum(), WithinAbs(1.0, 1e-14));
  CHECK(law.tail_mass < 1e-12);
}

TEST_CASE("poissonized toy law is at TV distance 2 exp(-r/2) from the limit") {
  const auto model = build_toy({2, 1.0, 0.5});
  const auto p = model.family().evaluate(Point{0.0, 0.0});
  const StateIndex v0 = model.states().index_of("+-");
  const Eigen::Vector4d limit{0.5, 0.0, 0.0, 0.5};
  for (double r : {0.5, 2.0, 8.0, 20.0}) {
    const auto law = poissonize(discrete_law(p, v0, 400), r, 1.0);
    CHECK_THAT(tv_distance(law.law, limit), WithinRel(2.0 * std::exp(-r / 2.0), 1e-10));
  }
}

TEST_CASE("poissonize needs enough jumps") {
  const auto model = build_toy({2, 1.0, 0.5});
  const auto p = model.family().evaluate(Point{0.0, 0.0});
  const auto traj = discrete_law(p, 1, 5);
  CHECK(code_of([&] { poissonize(traj, 10.0, 1.0); }) == ErrorCode::TruncationInsufficient);
}

TEST_CASE("total variation is a plain sum of absolute differences") {
  Eigen::VectorXd a(3), b(3), c(2);
  a << 1, 0, 0;
  b << 0, 0, 1;
  c << 0.5, 0.5;
  CHECK(tv_distance(a, b) == 2.0);
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(code_of([&] { tv_distance(a, c); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("sequence-driven law with a constant family equals the frozen law") {
  const auto model = build_toy({3, 1.0, 0.5});
  const Point x{0.1, 0.2, 0.3};
  const auto seq = JumpSequence::constant_offset(x, {0.05, -0.05, 0.0}, 30);
  const auto frozen = discrete_law(model.family().evaluate(x), 1, 30);
  const auto driven = discrete_law(model.family(), seq, 1, 30);
  for (std::size_t k = 0; k <= 30; ++k) CHECK((frozen.laws[k] - driven.laws[k]).lpNorm<1>() < 1e-15);
  CHECK(code_of([&] { discrete_law(model.family(), seq, 1, 31); }) == ErrorCode::SequenceTooShort);
}

TEST_CASE("jump sequences must stay inside their ball") {
  CHECK(code_of([] { JumpSequence({{0.5, 0.0}}, {0.0, 0.0}, 0.1); }) == ErrorCode::BallViolation);
  const JumpSequence s({{0.05, 0.0}, {0.0, -0.02}}, {0.0, 0.0}, 0.1);
  CHECK_THAT(s.sup_distance(), WithinAbs(0.05, 1e-17));
}

TEST_CASE("ball radius from the absorption bound") {
  CHECK_THAT(sequence_ball_radius({2, 0.5}, 0.25), WithinAbs(0.5, 1e-16));
  CHECK(std::isinf(sequence_ball_radius({1, 0.5}, 0.0)));
}

TEST_CASE("frozen versus sequence gap on the navigation model") {
  const auto model = build_coupled_navigation({2, 1.0, 2.0});
  const Point x{0.3, -0.2};
  const AbsorptionBound bound{1, 0.5};
  const StateIndex v0 = model.states().index_of("+-");
  double previous = 0.0;
  for (double delta : {1e-3, 1e-2, 1e-1}) {
    const auto seq = JumpSequence::constant_offset(x, {delta / 2, delta / 2}, 200);
    const auto gap = frozen_vs_sequence_gap(model.family(), x, v0, seq, 20.0, 1.0, bound);
    CHECK(gap.gap > previous);
    CHECK(gap.gap <= 2.0 * 20.0 * model.family().lipschitz_bound() * delta + 1e-12);
    CHECK_THAT(gap.sup_distance, WithinRel(delta, 1e-12));
    previous = gap.gap;
  }
  const auto far = JumpSequence::constant_offset(x, {0.5, 0.5}, 200);
  CHECK(code_of([&] { frozen_vs_sequence_gap(model.family(), x, v0, far, 20.0, 1.0, bound); }) ==
        ErrorCode::BallViolation);
  const auto off = JumpSequence::constant_offset({0.0, 0.0}, {0.01, 0.0}, 200);
  CHECK(code_of([&] { frozen_vs_sequence_gap(model.family(), x, v0, off, 20.0, 1.0, bound); }) ==
        ErrorCode::BallViolation);
}
