#include "p2pfl/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "p2pfl/error.hpp"
#include "p2pfl/graph.hpp"

namespace p2pfl {
namespace {

constexpr double kSymmetryTolerance = 1e-10;

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& precision) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularPrecision, "precision is not positive definite");
  }
  return llt;
}

}  // namespace

GaussianBelief::GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd precision)
    : mean_(std::move(mean)), precision_(std::move(precision)) {
  if (precision_.rows() != mean_.size() || precision_.cols() != mean_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "precision shape does not match the mean");
  }
  if (!mean_.allFinite() || !precision_.allFinite()) {
    throw Error(ErrorCode::kSingularPrecision, "belief has non-finite entries");
  }
  const double asym = (precision_ - precision_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * std::max(1.0, precision_.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kSingularPrecision, "precision is not symmetric");
  }
  precision_ = 0.5 * (precision_ + precision_.transpose());
  factor(precision_);
}

GaussianBelief GaussianBelief::from_covariance(Eigen::VectorXd mean,
                                               const Eigen::MatrixXd& covariance) {
  const auto llt = factor(covariance);
  const Eigen::MatrixXd precision =
      llt.solve(Eigen::MatrixXd::Identity(covariance.rows(), covariance.cols()));
  return GaussianBelief(std::move(mean), precision);
}

Eigen::MatrixXd GaussianBelief::covariance() const {
  return factor(precision_).solve(
      Eigen::MatrixXd::Identity(precision_.rows(), precision_.cols()));
}

double GaussianBelief::log_density(const Eigen::VectorXd& theta) const {
  const auto llt = factor(precision_);
  const Eigen::VectorXd diff = theta - mean_;
  const double quad = diff.dot(precision_ * diff);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det_precision = 2.0 * l.diagonal().array().log().sum();
  return 0.5 * log_det_precision - 0.5 * quad -
         0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd augment(const Eigen::VectorXd& x) {
  Eigen::VectorXd f(x.size() + 1);
  f(0) = 1.0;
  f.tail(x.size()) = x;
  return f;
}

GaussianBelief gaussian_bayes_update_features(const GaussianBelief& prior,
                                              const Eigen::VectorXd& features, double y,
                                              double noise_var) {
  if (!(noise_var > 0.0)) throw Error(ErrorCode::kInvalidInputs, "noise variance must be positive");
  if (static_cast<std::size_t>(features.size()) != prior.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "regressor has " + std::to_string(features.size()) +
                    " entries, belief dimension is " + std::to_string(prior.dimension()));
  }
  const Eigen::MatrixXd precision =
      prior.precision() + features * features.transpose() / noise_var;
  const Eigen::VectorXd information = prior.precision() * prior.mean() + features * (y / noise_var);
  const Eigen::VectorXd mean = factor(precision).solve(information);
  return GaussianBelief(mean, precision);
}

GaussianBelief gaussian_bayes_update(const GaussianBelief& prior, const Eigen::VectorXd& x,
                                     double y, double noise_var) {
  return gaussian_bayes_update_features(prior, augment(x), y, noise_var);
}

GaussianBelief gaussian_consensus(std::span<const WeightedGaussian> beliefs) {
  if (beliefs.empty()) throw Error(ErrorCode::kWeightMismatch, "no beliefs to merge");
  const Eigen::Index d = static_cast<Eigen::Index>(beliefs.front().belief->dimension());
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd information = Eigen::VectorXd::Zero(d);
  double total = 0.0;
  for (std::size_t j = 0; j < beliefs.size(); ++j) {
    const auto& [belief, weight] = beliefs[j];
    if (static_cast<Eigen::Index>(belief->dimension()) != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "belief " + std::to_string(j) + " has a different dimension");
    }
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw Error(ErrorCode::kWeightMismatch, "weight " + std::to_string(j) + " is negative");
    }
    total += weight;
    precision += weight * belief->precision();
    information += weight * (belief->precision() * belief->mean());
  }
  if (std::abs(total - 1.0) > kRowSumTolerance) {
    throw Error(ErrorCode::kWeightMismatch, "consensus weights sum to " + std::to_string(total));
  }
  const Eigen::VectorXd mean = factor(precision).solve(information);
  return GaussianBelief(mean, precision);
}

Predictive predictive_features(const GaussianBelief& belief, const Eigen::VectorXd& features,
                               double noise_var) {
  if (static_cast<std::size_t>(features.size()) != belief.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "regressor does not match belief dimension");
  }
  const Eigen::VectorXd solved = factor(belief.precision()).solve(features);
  return {belief.mean().dot(features), features.dot(solved) + noise_var};
}

Predictive predictive(const GaussianBelief& belief, const Eigen::VectorXd& x, double noise_var) {
  return predictive_features(belief, augment(x), noise_var);
}

BeliefVector discretized_consensus_oracle(std::span<const WeightedGaussian> beliefs,
                                          const ParameterSet& grid) {
  std::vector<BeliefVector> discretised;
  discretised.reserve(beliefs.size());
  for (const auto& [belief, weight] : beliefs) {
    Eigen::VectorXd lw(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t t = 0; t < grid.size(); ++t) {
      lw(static_cast<Eigen::Index>(t)) = belief->log_density(grid[t]);
    }
    discretised.emplace_back(std::move(lw));
  }
  std::vector<WeightedBelief> inputs;
  for (std::size_t j = 0; j < beliefs.size(); ++j) {
    inputs.push_back({&discretised[j], beliefs[j].weight});
  }
  return consensus_update(inputs);
}

}  // namespace p2pfl
