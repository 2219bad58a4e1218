#include "slowfast/oracle.hpp"

#include <algorithm>

namespace slowfast::oracle {

ChainDecomposition brute_force_decomposition(const Eigen::MatrixXd& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) reach[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;

  ChainDecomposition out;
  std::vector<char> assigned(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    bool recurrent = true;
    for (std::size_t w = 0; w < n; ++w)
      if (reach[v][w] && !reach[w][v]) recurrent = false;
    if (!recurrent) {
      out.transient.push_back(v);
      continue;
    }
    if (assigned[v]) continue;
    std::vector<StateIndex> members;
    for (std::size_t w = 0; w < n; ++w)
      if (reach[v][w] && reach[w][v]) {
        members.push_back(w);
        assigned[w] = 1;
      }
    out.classes.push_back(members);
  }
  return out;
}

Eigen::VectorXd power_iteration_stationary(const Eigen::MatrixXd& p,
                                           const std::vector<StateIndex>& members,
                                           std::size_t iterations) {
  const auto m = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd block(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      block(a, b) = p(static_cast<Eigen::Index>(members[a]), static_cast<Eigen::Index>(members[b]));
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(m, 1.0 / static_cast<double>(m));
  Eigen::RowVectorXd average = Eigen::RowVectorXd::Zero(m);
  for (std::size_t k = 0; k < iterations; ++k) {
    average += mu;
    mu = mu * block;
  }
  average /= average.sum();
  return average.transpose();
}

std::vector<double> monte_carlo_absorption(const Eigen::MatrixXd& p,
                                           const ChainDecomposition& decomposition,
                                           StateIndex v0, std::size_t replicas,
                                           std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<int> class_of(n, -1);
  for (std::size_t i = 0; i < decomposition.classes.size(); ++i)
    for (StateIndex v : decomposition.classes[i]) class_of[v] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> counts(decomposition.classes.size(), 0.0);
  for (std::size_t r = 0; r < replicas; ++r) {
    StateIndex v = v0;
    while (class_of[v] < 0) {
      const double u = uniform(rng);
      double cumulative = 0.0;
      StateIndex next = n - 1;
      for (std::size_t w = 0; w < n; ++w) {
        cumulative += p(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w));
        if (u < cumulative) {
          next = w;
          break;
        }
      }
      v = next;
    }
    counts[static_cast<std::size_t>(class_of[v])] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(replicas);
  return counts;
}

Eigen::MatrixXd random_sparse_stochastic(std::size_t n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j)
      if (uniform(rng) < density) m(i, j) = 0.05 + uniform(rng);
    if (m.row(i).sum() == 0.0) m(i, static_cast<Eigen::Index>(pick(rng))) = 1.0;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace slowfast::oracle
