#include "p2pfl/beliefs.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "p2pfl/error.hpp"
#include "p2pfl/graph.hpp"

namespace p2pfl {
namespace {

constexpr double kNormalizedTolerance = 1e-9;

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

BeliefVector::BeliefVector(Eigen::VectorXd log_weights) : log_weights_(std::move(log_weights)) {
  normalized_ = log_weights_.size() > 0 &&
                std::abs(log_sum_exp(log_weights_)) <= kNormalizedTolerance;
}

Eigen::VectorXd BeliefVector::probabilities() const {
  return (log_weights_.array() - log_sum_exp(log_weights_)).exp();
}

double BeliefVector::log_normalizer() const { return log_sum_exp(log_weights_); }

BeliefVector& BeliefVector::normalize() {
  const double z = log_sum_exp(log_weights_);
  if (!std::isfinite(z)) {
    throw Error(ErrorCode::kZeroLikelihoodAllTheta, "belief has no finite mass");
  }
  log_weights_.array() -= z;
  clamped_ = false;
  for (Eigen::Index k = 0; k < log_weights_.size(); ++k) {
    if (!(log_weights_(k) >= kLogFloor)) {
      log_weights_(k) = kLogFloor;
      clamped_ = true;
    }
  }
  normalized_ = true;
  return *this;
}

BeliefVector BeliefVector::shifted(double shift) const {
  BeliefVector out(log_weights_.array() + shift);
  return out;
}

BeliefVector uniform_prior(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::kInvalidInputs, "belief over an empty set");
  return BeliefVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size),
                                                -std::log(static_cast<double>(size))))
      .normalize();
}

BeliefVector belief_from_probabilities(const Eigen::VectorXd& probabilities) {
  if (probabilities.size() == 0 || (probabilities.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidInputs, "probabilities must be non-negative");
  }
  return BeliefVector(probabilities.array().log().matrix()).normalize();
}

BeliefVector bayesian_update(const BeliefVector& prior, const Eigen::VectorXd& log_likelihoods) {
  if (log_likelihoods.size() != prior.log_weights().size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "likelihood vector has " + std::to_string(log_likelihoods.size()) +
                    " entries, belief has " + std::to_string(prior.size()));
  }
  if (!(log_likelihoods.array() > -std::numeric_limits<double>::infinity()).any()) {
    throw Error(ErrorCode::kZeroLikelihoodAllTheta,
                "observation has zero likelihood under every parameter");
  }
  BeliefVector posterior(prior.log_weights() + log_likelihoods);
  return posterior.normalize();
}

Eigen::VectorXd log_likelihood_vector(const LikelihoodModel& model,
                                      const ParameterSet& theta_set, const Instance& x,
                                      double y) {
  Eigen::VectorXd ll(static_cast<Eigen::Index>(theta_set.size()));
  for (std::size_t t = 0; t < theta_set.size(); ++t) {
    ll(static_cast<Eigen::Index>(t)) = model.log_likelihood(y, theta_set[t], x);
  }
  return ll;
}

BeliefVector bayesian_update(const BeliefVector& prior, const LikelihoodModel& model,
                             const ParameterSet& theta_set, const Instance& x, double y) {
  return bayesian_update(prior, log_likelihood_vector(model, theta_set, x, y));
}

BeliefVector consensus_update(std::span<const WeightedBelief> publics, bool row_sum_check) {
  if (publics.empty()) throw Error(ErrorCode::kWeightMismatch, "no beliefs to merge");
  const Eigen::Index m = publics.front().belief->log_weights().size();
  Eigen::VectorXd merged = Eigen::VectorXd::Zero(m);
  double total = 0.0;
  for (std::size_t j = 0; j < publics.size(); ++j) {
    const auto& [belief, weight] = publics[j];
    if (belief->log_weights().size() != m) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "belief " + std::to_string(j) + " has a different parameter set size");
    }
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw Error(ErrorCode::kWeightMismatch,
                  "weight " + std::to_string(j) + " is negative or not finite");
    }
    total += weight;
    if (weight == 0.0) continue;
    merged += weight * belief->log_weights();
  }
  if (row_sum_check && std::abs(total - 1.0) > kRowSumTolerance) {
    throw Error(ErrorCode::kWeightMismatch,
                "consensus weights sum to " + std::to_string(total));
  }
  return BeliefVector(std::move(merged)).normalize();
}

std::size_t map_estimate(const BeliefVector& belief) {
  const Eigen::VectorXd& lw = belief.log_weights();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < lw.size(); ++k) {
    if (lw(k) > lw(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

}  // namespace p2pfl
