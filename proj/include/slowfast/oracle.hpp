#pragma once

// Reference computations that share no code path with the main library,
// used by the acceptance suite and the tests.

#include <cstdint>
#include <random>
#include <vector>

#include "slowfast/markov.hpp"

namespace slowfast::oracle {

// Classes from the transitive closure: v is recurrent iff every state
// reachable from v reaches v back. Same ordering as decompose().
ChainDecomposition brute_force_decomposition(const Eigen::MatrixXd& p);

// Cesaro-averaged power iteration of the chain restricted to members.
Eigen::VectorXd power_iteration_stationary(const Eigen::MatrixXd& p,
                                           const std::vector<StateIndex>& members,
                                           std::size_t iterations = 20000);

// Fraction of replicas absorbed in each class, simulated with std::mt19937_64.
std::vector<double> monte_carlo_absorption(const Eigen::MatrixXd& p,
                                           const ChainDecomposition& decomposition,
                                           StateIndex v0, std::size_t replicas,
                                           std::uint64_t seed);

// Random row-stochastic matrix where each entry is positive with
// probability density (diagonal included) and every row has at least one
// positive entry.
Eigen::MatrixXd random_sparse_stochastic(std::size_t n, double density, std::mt19937_64& rng);

}  // namespace slowfast::oracle
