#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace p2pfl {

/// Row-stochastic confidence matrix of a strongly connected aperiodic
/// directed graph. Entry (i, j) is the weight node i places on the belief it
/// receives from node j; it is positive exactly when j is an in-neighbour of
/// i (or j == i). Only obtainable through validate_weight_matrix(), so every
/// instance satisfies the invariants.
class WeightMatrix {
 public:
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(weights_.rows());
  }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& matrix() const noexcept { return weights_; }

  /// In-neighbours of node i including i itself when W(i, i) > 0.
  std::vector<std::size_t> in_neighbours(std::size_t i) const;

  std::vector<std::vector<double>> to_rows() const;

 private:
  explicit WeightMatrix(Eigen::MatrixXd weights) : weights_(std::move(weights)) {}
  friend WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw);

  Eigen::MatrixXd weights_;
};

inline constexpr double kRowSumTolerance = 1e-9;

// Throws Error with kNotSquare, kNonFinite, kNegativeWeight, kNotStochastic,
// kNotStronglyConnected or kPeriodic. The message names the offending row.
WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw);
WeightMatrix validate_weight_matrix(const std::vector<std::vector<double>>& rows);

/// Period of the positivity pattern of a strongly connected matrix: gcd of all
/// cycle lengths through node 0.
std::size_t graph_period(const Eigen::MatrixXd& weights);
bool strongly_connected(const Eigen::MatrixXd& weights);

enum class StationaryMethod { kAuto, kDirect, kPowerIteration };

/// Unique left Perron vector v with vW = v, sum(v) = 1. kAuto uses a direct
/// linear solve up to 64 nodes and power iteration beyond.
Eigen::VectorXd stationary_distribution(
    const WeightMatrix& w, StationaryMethod method = StationaryMethod::kAuto);

struct SpectralSummary {
  Eigen::VectorXd stationary;
  double lambda_max = 0.0;    // second-largest eigenvalue modulus
  double mixing_bound = 0.0;  // 4 ln(N) / (1 - lambda_max)
};

SpectralSummary spectral_gap(const WeightMatrix& w);

struct MixingReport {
  std::size_t horizon = 0;
  double bound = 0.0;
  // partial_sums[i] = sum_{k=1..horizon} sum_j |W^k(i, j) - v_j|
  std::vector<double> partial_sums;
  std::vector<bool> within_bound;

  bool all_within() const;
};

MixingReport verify_mixing_bound(const WeightMatrix& w, std::size_t horizon);

}  // namespace p2pfl
