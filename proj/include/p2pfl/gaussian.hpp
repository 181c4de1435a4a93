#pragma once

#include <span>
#include <utility>

#include <Eigen/Core>

#include "p2pfl/beliefs.hpp"
#include "p2pfl/models.hpp"

namespace p2pfl {

/// Gaussian belief over a continuous parameter, kept in information form
/// (mean and precision). The constructor rejects non-symmetric or
/// non-positive-definite precisions with kSingularPrecision.
class GaussianBelief {
 public:
  GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd precision);

  static GaussianBelief from_covariance(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& precision() const noexcept { return precision_; }
  Eigen::MatrixXd covariance() const;
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean_.size()); }

  double log_density(const Eigen::VectorXd& theta) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
};

/// x~ = [1, x].
Eigen::VectorXd augment(const Eigen::VectorXd& x);

/// Conjugate update for y = <theta, x~> + eta, eta ~ N(0, noise_var).
/// `features` is the already augmented regressor.
GaussianBelief gaussian_bayes_update_features(const GaussianBelief& prior,
                                              const Eigen::VectorXd& features, double y,
                                              double noise_var);
/// Same as above with x~ = [1, x] formed internally.
GaussianBelief gaussian_bayes_update(const GaussianBelief& prior, const Eigen::VectorXd& x,
                                     double y, double noise_var);

struct WeightedGaussian {
  const GaussianBelief* belief;
  double weight;
};

/// Geometric-mean consensus of Gaussians: precision sum_j w_j Lambda_j and
/// mean (sum_j w_j Lambda_j)^{-1} sum_j w_j Lambda_j mu_j.
GaussianBelief gaussian_consensus(std::span<const WeightedGaussian> beliefs);

struct Predictive {
  double mean = 0.0;
  double variance = 0.0;
};

Predictive predictive_features(const GaussianBelief& belief, const Eigen::VectorXd& features,
                               double noise_var);
Predictive predictive(const GaussianBelief& belief, const Eigen::VectorXd& x, double noise_var);

/// Test-only cross-check of gaussian_consensus: evaluates every input density
/// on `grid`, merges the discretised beliefs with consensus_update and
/// returns the merged grid belief.
BeliefVector discretized_consensus_oracle(std::span<const WeightedGaussian> beliefs,
                                          const ParameterSet& grid);

}  // namespace p2pfl
