#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "p2pfl/beliefs.hpp"
#include "p2pfl/error.hpp"

using namespace p2pfl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

}  // namespace

TEST(UniformPrior, Values) {
  const auto b = uniform_prior(4);
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(b.log_weights()(k), std::log(0.25));
  EXPECT_TRUE(b.normalized());
  EXPECT_DOUBLE_EQ(uniform_prior(1).log_weights()(0), 0.0);
  EXPECT_NEAR(uniform_prior(10).probabilities().sum(), 1.0, 1e-12);
}

TEST(BayesianUpdate, HandComputed) {
  const auto post = bayesian_update(uniform_prior(2), vec({std::log(0.9), std::log(0.5)}));
  EXPECT_NEAR(post.probabilities()(0), 9.0 / 14.0, 1e-15);
  EXPECT_NEAR(post.probabilities()(1), 5.0 / 14.0, 1e-15);
  EXPECT_NEAR(post.log_normalizer(), 0.0, 1e-12);
}

TEST(BayesianUpdate, ConstantLikelihoodKeepsPrior) {
  const auto prior = belief_from_probabilities(vec({0.2, 0.3, 0.5}));
  const auto post = bayesian_update(prior, vec({-1.3, -1.3, -1.3}));
  EXPECT_TRUE(post.log_weights().isApprox(prior.log_weights(), 1e-14));
}

TEST(BayesianUpdate, PointMassStaysPointMass) {
  const auto prior = belief_from_probabilities(vec({1.0, 0.0, 0.0}));
  auto b = prior;
  for (int k = 0; k < 20; ++k) b = bayesian_update(b, vec({std::log(0.1), std::log(0.9), 0.0}));
  EXPECT_EQ(map_estimate(b), 0u);
  EXPECT_NEAR(b.probabilities()(0), 1.0, 1e-12);
}

TEST(BayesianUpdate, AllZeroLikelihoodThrows) {
  const double ninf = -std::numeric_limits<double>::infinity();
  try {
    bayesian_update(uniform_prior(2), vec({ninf, ninf}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroLikelihoodAllTheta);
  }
}

TEST(BayesianUpdate, FloorIsFlagged) {
  const auto post = bayesian_update(uniform_prior(2), vec({0.0, -800.0}));
  EXPECT_TRUE(post.clamped());
  EXPECT_DOUBLE_EQ(post.log_weights()(1), kLogFloor);
  EXPECT_TRUE(std::isfinite(post.log_weights()(1)));
}

TEST(Consensus, Examples) {
  const auto a = belief_from_probabilities(vec({0.8, 0.2}));
  const auto b = belief_from_probabilities(vec({0.2, 0.8}));
  const std::vector<WeightedBelief> in{{&a, 0.5}, {&b, 0.5}};
  const auto c = consensus_update(in);
  EXPECT_NEAR(c.probabilities()(0), 0.5, 1e-15);
  EXPECT_NEAR(c.probabilities()(1), 0.5, 1e-15);

  const std::vector<WeightedBelief> same{{&a, 0.3}, {&a, 0.7}};
  EXPECT_TRUE(consensus_update(same).log_weights().isApprox(a.log_weights(), 1e-14));

  const auto raw = BeliefVector(vec({1.0, 3.0}));
  const std::vector<WeightedBelief> pick{{&a, 0.0}, {&raw, 1.0}};
  const auto p = consensus_update(pick).probabilities();
  EXPECT_NEAR(p(1), std::exp(3.0) / (std::exp(1.0) + std::exp(3.0)), 1e-15);
}

TEST(Consensus, RejectsBadWeights) {
  const auto a = uniform_prior(2);
  const auto b = uniform_prior(3);
  const std::vector<WeightedBelief> off{{&a, 0.5}, {&a, 0.6}};
  EXPECT_THROW(consensus_update(off), Error);
  EXPECT_NO_THROW(consensus_update(off, false));
  const std::vector<WeightedBelief> negative{{&a, 1.5}, {&a, -0.5}};
  EXPECT_THROW(consensus_update(negative, false), Error);
  const std::vector<WeightedBelief> sizes{{&a, 0.5}, {&b, 0.5}};
  try {
    consensus_update(sizes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(MapEstimate, TieBreaks) {
  EXPECT_EQ(map_estimate(belief_from_probabilities(vec({0.1, 0.7, 0.2}))), 1u);
  EXPECT_EQ(map_estimate(belief_from_probabilities(vec({0.5, 0.5}))), 0u);
  EXPECT_EQ(map_estimate(uniform_prior(10)), 0u);
}
