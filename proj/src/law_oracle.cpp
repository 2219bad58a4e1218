#include "slowfast/law_oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "slowfast/error.hpp"

namespace slowfast {

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "points of different dimension");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

JumpSequence::JumpSequence(std::vector<Point> points, Point ball_center, double ball_radius)
    : points_(std::move(points)), ball_center_(std::move(ball_center)), ball_radius_(ball_radius) {
  require(ball_radius_ >= 0.0, "ball radius must be nonnegative");
  for (const auto& p : points_) {
    // Relative slack absorbs rounding in center + offset.
    if (l1_distance(p, ball_center_) > ball_radius_ * (1.0 + 1e-12) + 1e-15)
      fail(ErrorCode::BallViolation, "sequence point outside its declared ball");
  }
}

JumpSequence JumpSequence::constant_offset(const Point& center, const Point& offset,
                                           std::size_t n) {
  require(center.size() == offset.size(), "offset dimension mismatch");
  Point p(center.size());
  double radius = 0.0;
  for (std::size_t k = 0; k < center.size(); ++k) {
    p[k] = center[k] + offset[k];
    radius += std::abs(offset[k]);
  }
  return JumpSequence(std::vector<Point>(n, p), center, radius);
}

double JumpSequence::sup_distance() const {
  double sup = 0.0;
  for (const auto& p : points_) sup = std::max(sup, l1_distance(p, ball_center_));
  return sup;
}

DiscreteLawTrajectory discrete_law(const StochasticMatrix& matrix, StateIndex v0,
                                   std::size_t k_max) {
  require(v0 < matrix.size(), "initial state out of range");
  DiscreteLawTrajectory out;
  out.laws.reserve(k_max + 1);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(matrix.size()));
  mu(static_cast<Eigen::Index>(v0)) = 1.0;
  out.laws.push_back(mu);
  const Eigen::MatrixXd transposed = matrix.entries().transpose();
  for (std::size_t k = 0; k < k_max; ++k) {
    mu = transposed * mu;
    out.laws.push_back(mu);
  }
  return out;
}

DiscreteLawTrajectory discrete_law(const TransitionFamily& family, const JumpSequence& sequence,
                                   StateIndex v0, std::size_t k_max) {
  require(v0 < family.state_count(), "initial state out of range");
  if (k_max > sequence.size()) {
    std::ostringstream msg;
    msg << "k_max " << k_max << " exceeds sequence length " << sequence.size();
    fail(ErrorCode::SequenceTooShort, msg.str());
  }
  DiscreteLawTrajectory out;
  out.laws.reserve(k_max + 1);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(family.state_count()));
  mu(static_cast<Eigen::Index>(v0)) = 1.0;
  out.laws.push_back(mu);
  for (std::size_t k = 0; k < k_max; ++k) {
    const StochasticMatrix p = family.evaluate(sequence.points()[k]);
    mu = p.entries().transpose() * mu;
    out.laws.push_back(mu);
  }
  return out;
}

namespace {

long double poisson_pmf(double mean, std::size_t k) {
  const long double kk = static_cast<long double>(k);
  return std::exp(kk * std::log(static_cast<long double>(mean)) - mean - std::lgamma(kk + 1.0L));
}

}  // namespace

std::size_t poisson_truncation_index(double mean, double tail_tol) {
  require(mean >= 0.0 && std::isfinite(mean), "Poisson mean must be finite and nonnegative");
  require(tail_tol > 0.0, "tail tolerance must be positive");
  if (mean == 0.0) return 0;
  long double cumulative = 0.0L;
  for (std::size_t k = 0;; ++k) {
    cumulative += poisson_pmf(mean, k);
    if (1.0L - cumulative < tail_tol && static_cast<double>(k) >= mean) return k;
  }
}

PoissonizedLaw poissonize(const DiscreteLawTrajectory& trajectory, double rate, double t,
                          double tail_tol) {
  require(!trajectory.laws.empty(), "law trajectory is empty");
  require(t >= 0.0, "time must be nonnegative");
  require(rate >= 0.0, "rate must be nonnegative");
  require(tail_tol > 0.0, "tail tolerance must be positive");
  const double mean = rate * t;

  PoissonizedLaw out;
  if (mean == 0.0) {
    out.law = trajectory.laws.front();
    return out;
  }
  const std::size_t k_needed = poisson_truncation_index(mean, tail_tol);
  if (k_needed > trajectory.k_max()) {
    std::ostringstream msg;
    msg << "Poisson tail below " << tail_tol << " needs " << k_needed
        << " jumps, trajectory has " << trajectory.k_max();
    fail(ErrorCode::TruncationInsufficient, msg.str());
  }
  Eigen::VectorXd law = Eigen::VectorXd::Zero(trajectory.laws.front().size());
  long double cumulative = 0.0L;
  for (std::size_t k = 0; k <= k_needed; ++k) {
    const long double w = poisson_pmf(mean, k);
    cumulative += w;
    law += static_cast<double>(w) * trajectory.laws[k];
  }
  out.truncation_index = k_needed;
  out.tail_mass = static_cast<double>(1.0L - cumulative);
  out.law = law / law.sum();
  return out;
}

double tv_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  if (mu.size() != nu.size()) fail(ErrorCode::DimensionMismatch, "laws over different spaces");
  return (mu - nu).cwiseAbs().sum();
}

double sequence_ball_radius(const AbsorptionBound& bound, double lipschitz_bound) {
  if (lipschitz_bound == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - bound.z0) / (2.0 * lipschitz_bound * static_cast<double>(bound.n_tilde));
}

SequenceGap frozen_vs_sequence_gap(const TransitionFamily& family, const Point& x, StateIndex v0,
                                   const JumpSequence& sequence, double rate, double t,
                                   const AbsorptionBound& bound, double tail_tol) {
  if (sequence.ball_center() != x)
    fail(ErrorCode::BallViolation, "sequence ball is not centred on the frozen state");
  const double radius = sequence_ball_radius(bound, family.lipschitz_bound());
  if (sequence.ball_radius() > radius) {
    std::ostringstream msg;
    msg << "sequence ball radius " << sequence.ball_radius() << " exceeds " << radius;
    fail(ErrorCode::BallViolation, msg.str());
  }
  const std::size_t k = poisson_truncation_index(rate * t, tail_tol);
  const auto frozen = poissonize(discrete_law(family.evaluate(x), v0, k), rate, t, tail_tol);
  const auto driven = poissonize(discrete_law(family, sequence, v0, k), rate, t, tail_tol);
  return SequenceGap{tv_distance(frozen.law, driven.law), sequence.sup_distance()};
}

}  // namespace slowfast
