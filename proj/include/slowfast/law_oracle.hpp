#pragma once

// Sampling-free laws of the fast process: discrete-time laws after k jumps,
// their Poisson mixtures at continuous time t, and total-variation gaps.
//
// Total variation follows the convention ||mu - nu||_TV = sum |mu(v) - nu(v)|
// (no factor 1/2), so disjoint point masses are at distance 2.

#include <Eigen/Dense>

#include "slowfast/markov.hpp"

namespace slowfast {

struct DiscreteLawTrajectory {
  std::vector<Eigen::VectorXd> laws;  // laws[k] = law after k jumps

  std::size_t k_max() const { return laws.empty() ? 0 : laws.size() - 1; }
};

// Finite list of slow states x(1), x(2), ... used at successive jumps; all
// points lie in the closed 1-norm ball around ball_center.
class JumpSequence {
 public:
  JumpSequence(std::vector<Point> points, Point ball_center, double ball_radius);

  // n copies of center + offset, with ball radius ||offset||_1.
  static JumpSequence constant_offset(const Point& center, const Point& offset, std::size_t n);

  const std::vector<Point>& points() const { return points_; }
  const Point& ball_center() const { return ball_center_; }
  double ball_radius() const { return ball_radius_; }
  std::size_t size() const { return points_.size(); }
  // sup_k ||x(k) - center||_1
  double sup_distance() const;

 private:
  std::vector<Point> points_;
  Point ball_center_;
  double ball_radius_;
};

double l1_distance(std::span<const double> a, std::span<const double> b);

// Frozen chain: mu_{k+1} = mu_k P.
DiscreteLawTrajectory discrete_law(const StochasticMatrix& matrix, StateIndex v0,
                                   std::size_t k_max);
// Sequence-driven chain: the k-th jump uses P_{x(k)}. Throws SequenceTooShort
// when k_max exceeds the sequence length.
DiscreteLawTrajectory discrete_law(const TransitionFamily& family, const JumpSequence& sequence,
                                   StateIndex v0, std::size_t k_max);

// Smallest K with P[Poisson(mean) > K] < tail_tol.
std::size_t poisson_truncation_index(double mean, double tail_tol);

struct PoissonizedLaw {
  Eigen::VectorXd law;
  std::size_t truncation_index = 0;
  double tail_mass = 0.0;  // mass dropped before renormalization
};

// sum_k P[Poisson(rate t) = k] laws[k], truncated once the remaining Poisson
// tail is below tail_tol. Throws TruncationInsufficient if the trajectory is
// too short.
PoissonizedLaw poissonize(const DiscreteLawTrajectory& trajectory, double rate, double t,
                          double tail_tol = 1e-12);

// Throws DimensionMismatch for vectors of different length.
double tv_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);

struct AbsorptionBound {
  std::size_t n_tilde = 1;
  double z0 = 0.0;
};

// Radius (1 - z0) / (2 K0 n_tilde) of the ball within which the
// frozen/sequence-driven comparison is controlled; infinite when K0 = 0.
double sequence_ball_radius(const AbsorptionBound& bound, double lipschitz_bound);

struct SequenceGap {
  double gap = 0.0;           // ||frozen law - sequence law||_TV at time t
  double sup_distance = 0.0;  // sup_k ||x - x(k)||_1
};

// Throws BallViolation if the sequence is not centred on x or its ball is
// larger than sequence_ball_radius(bound, K0).
SequenceGap frozen_vs_sequence_gap(const TransitionFamily& family, const Point& x, StateIndex v0,
                                   const JumpSequence& sequence, double rate, double t,
                                   const AbsorptionBound& bound, double tail_tol = 1e-12);

}  // namespace slowfast
