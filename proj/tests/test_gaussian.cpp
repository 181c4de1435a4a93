#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "p2pfl/error.hpp"
#include "p2pfl/gaussian.hpp"

using namespace p2pfl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

GaussianBelief prior3() {
  return GaussianBelief::from_covariance(Eigen::VectorXd::Zero(3),
                                         0.5 * Eigen::MatrixXd::Identity(3, 3));
}

GaussianBelief scalar(double mean, double precision) {
  return GaussianBelief(vec({mean}), Eigen::MatrixXd::Constant(1, 1, precision));
}

}  // namespace

TEST(GaussianBelief, RejectsBadPrecision) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(GaussianBelief(vec({0, 0}), asym), Error);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(GaussianBelief(vec({0, 0}), indefinite), Error);
}

TEST(BayesUpdate, SingleObservation) {
  const auto post = gaussian_bayes_update(prior3(), vec({1, 0}), 1.0, 0.64);
  Eigen::MatrixXd expected = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  expected.topLeftCorner(2, 2).array() += 1.5625;
  EXPECT_TRUE(post.precision().isApprox(expected, 1e-14));
  // (3.5625 + 1.5625) m = 1.5625 for both observed coefficients
  EXPECT_NEAR(post.mean()(0), 0.3048780487804878, 1e-14);
  EXPECT_NEAR(post.mean()(1), 0.3048780487804878, 1e-14);
  EXPECT_NEAR(post.mean()(2), 0.0, 1e-15);
}

TEST(BayesUpdate, HugeNoiseIsUninformative) {
  const auto post = gaussian_bayes_update(prior3(), vec({1, -2}), 3.0, 1e12);
  EXPECT_TRUE(post.mean().isZero(1e-6));
  EXPECT_TRUE(post.precision().isApprox(prior3().precision(), 1e-6));
}

TEST(BayesUpdate, RepeatedEqualsBatched) {
  const auto x = vec({0.3, -0.7});
  const Eigen::VectorXd xt = augment(x);
  auto b = prior3();
  for (int k = 0; k < 7; ++k) b = gaussian_bayes_update(b, x, 0.9, 0.64);
  const Eigen::MatrixXd lambda = prior3().precision() + 7.0 * xt * xt.transpose() / 0.64;
  const Eigen::VectorXd mean = lambda.llt().solve(7.0 * 0.9 * xt / 0.64);
  EXPECT_TRUE(b.precision().isApprox(lambda, 1e-12));
  EXPECT_TRUE(b.mean().isApprox(mean, 1e-12));
}

TEST(Consensus, ScalarExample) {
  const auto a = scalar(0.0, 1.0);
  const auto b = scalar(2.0, 3.0);
  const std::vector<WeightedGaussian> in{{&a, 0.5}, {&b, 0.5}};
  const auto c = gaussian_consensus(in);
  EXPECT_NEAR(c.precision()(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(c.mean()(0), 1.5, 1e-15);
}

TEST(Consensus, IdempotentAndSymmetric) {
  const auto p = gaussian_bayes_update(prior3(), vec({1, 0.5}), 0.2, 0.64);
  const std::vector<WeightedGaussian> same{{&p, 0.9}, {&p, 0.1}};
  const auto c = gaussian_consensus(same);
  EXPECT_TRUE(c.mean().isApprox(p.mean(), 1e-13));
  EXPECT_TRUE(c.precision().isApprox(p.precision(), 1e-13));

  const GaussianBelief q(vec({1, -1, 2}), p.precision());
  const GaussianBelief r(vec({3, 1, 0}), p.precision());
  const std::vector<WeightedGaussian> pair{{&q, 0.5}, {&r, 0.5}};
  const auto m = gaussian_consensus(pair);
  EXPECT_TRUE(m.mean().isApprox(vec({2, 0, 1}), 1e-12));
}

TEST(Predictive, Examples) {
  const GaussianBelief sharp(vec({-0.3, 0.5, 0.8}), 1e12 * Eigen::MatrixXd::Identity(3, 3));
  const auto a = predictive(sharp, vec({1, 1}), 0.64);
  EXPECT_NEAR(a.mean, 1.0, 1e-12);
  EXPECT_NEAR(a.variance, 0.64, 1e-9);
  const auto b = predictive(prior3(), vec({0, 0}), 0.64);
  EXPECT_NEAR(b.mean, 0.0, 1e-15);
  EXPECT_NEAR(b.variance, 1.14, 1e-14);
  const GaussianBelief shifted(vec({0.7, 5, -3}), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_NEAR(predictive(shifted, vec({0, 0}), 0.64).mean, 0.7, 1e-15);
}

TEST(Oracle, ScalarExampleOnGrid) {
  const auto a = scalar(0.0, 1.0);
  const auto b = scalar(2.0, 3.0);
  const std::vector<WeightedGaussian> in{{&a, 0.5}, {&b, 0.5}};
  const auto grid = ParameterSet::grid(vec({-10}), vec({10}), {4001});
  const auto merged = discretized_consensus_oracle(in, grid);
  const double step = 20.0 / 4000.0;
  EXPECT_LE(std::abs(grid[map_estimate(merged)](0) - 1.5), step);

  const Eigen::VectorXd p = merged.probabilities();
  double mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    mean += p(static_cast<Eigen::Index>(k)) * grid[k](0);
    second += p(static_cast<Eigen::Index>(k)) * grid[k](0) * grid[k](0);
  }
  EXPECT_NEAR(mean, 1.5, step * step);
  EXPECT_NEAR(second - mean * mean, 0.5, step * step);
}

TEST(Oracle, IdenticalInputsReproduceTheDiscretisedInput) {
  const auto a = scalar(0.4, 2.5);
  const std::vector<WeightedGaussian> in{{&a, 0.3}, {&a, 0.7}};
  const auto grid = ParameterSet::grid(vec({-5}), vec({5}), {201});
  const auto merged = discretized_consensus_oracle(in, grid);
  Eigen::VectorXd logs(201);
  for (std::size_t k = 0; k < grid.size(); ++k) logs(static_cast<Eigen::Index>(k)) = a.log_density(grid[k]);
  const auto expected = BeliefVector(logs).normalize();
  EXPECT_TRUE(merged.log_weights().isApprox(expected.log_weights(), 1e-9));
}
