#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "p2pfl/models.hpp"

namespace p2pfl {

/// Normalised log-weights are clamped from below at this value so that a
/// vanishing mass never turns into -inf.
inline constexpr double kLogFloor = -700.0;

/// Belief over a finite parameter set, stored as natural-log masses. Houses
/// both the private (post-consensus) and public (post-Bayes) beliefs.
class BeliefVector {
 public:
  BeliefVector() = default;
  /// Wraps raw log-masses; `normalized` is recomputed from the data.
  explicit BeliefVector(Eigen::VectorXd log_weights);

  std::size_t size() const noexcept { return static_cast<std::size_t>(log_weights_.size()); }
  const Eigen::VectorXd& log_weights() const noexcept { return log_weights_; }
  bool normalized() const noexcept { return normalized_; }
  /// True when the last normalisation had to raise an entry to kLogFloor.
  bool clamped() const noexcept { return clamped_; }

  Eigen::VectorXd probabilities() const;
  double log_normalizer() const;  // log-sum-exp of the log-weights

  /// Subtracts the log-sum-exp and applies the floor.
  BeliefVector& normalize();

  /// Adds `shift` to every log-weight (multiplies the unnormalised mass by
  /// exp(shift)).
  BeliefVector shifted(double shift) const;

 private:
  Eigen::VectorXd log_weights_;
  bool normalized_ = false;
  bool clamped_ = false;
};

BeliefVector uniform_prior(std::size_t size);
BeliefVector belief_from_probabilities(const Eigen::VectorXd& probabilities);

/// Posterior proportional to exp(log_likelihoods) * prior. Throws
/// kZeroLikelihoodAllTheta when no parameter has positive likelihood.
BeliefVector bayesian_update(const BeliefVector& prior,
                             const Eigen::VectorXd& log_likelihoods);
BeliefVector bayesian_update(const BeliefVector& prior, const LikelihoodModel& model,
                             const ParameterSet& theta_set, const Instance& x, double y);

/// Log-likelihood of one observation under every parameter in the set.
Eigen::VectorXd log_likelihood_vector(const LikelihoodModel& model,
                                      const ParameterSet& theta_set, const Instance& x,
                                      double y);

struct WeightedBelief {
  const BeliefVector* belief;
  double weight;
};

/// Weighted geometric mean of the inputs: log-mass sum_j w_j log b_j, then
/// normalised. Inputs may be unnormalised; per-input constants cancel.
/// Throws kWeightMismatch (negative weights, or the sum is off 1 when
/// `row_sum_check`) or kDimensionMismatch.
BeliefVector consensus_update(std::span<const WeightedBelief> publics,
                              bool row_sum_check = true);

/// Argmax; ties go to the lowest index.
std::size_t map_estimate(const BeliefVector& belief);

}  // namespace p2pfl
