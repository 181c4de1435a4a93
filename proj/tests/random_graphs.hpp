#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "p2pfl/graph.hpp"

namespace p2pfl::test_support {

/// Strongly connected, aperiodic weight matrix: a random directed cycle
/// through all nodes, self-loops everywhere, and extra edges with
/// probability `density`; each row gets random positive weights.
template <typename Rng>
WeightMatrix random_weight_matrix(std::size_t n, double density, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
  for (std::size_t k = 0; k < n; ++k) {
    edge[order[k]][order[(k + 1) % n]] = true;
    edge[k][k] = true;
  }
  std::bernoulli_distribution extra(density);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (edge[i][j] || extra(rng)) rows[i][j] = weight(rng);
      total += rows[i][j];
    }
    for (double& w : rows[i]) w /= total;
    // Push rounding residue into the diagonal so the row sums to 1.
    rows[i][i] += 1.0 - std::accumulate(rows[i].begin(), rows[i].end(), 0.0);
  }
  return validate_weight_matrix(rows);
}

}  // namespace p2pfl::test_support
