#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "p2pfl/error.hpp"
#include "p2pfl/theory.hpp"

using namespace p2pfl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

BoundInputs worked_example() {
  BoundInputs in;
  in.n_nodes = 2;
  in.n_params = 10;
  in.delta = 0.1;
  in.log_ratio_bound = 2.0;
  in.k_theta = 0.5;
  in.lambda_max = 0.3;
  return in;
}

}  // namespace

TEST(SampleComplexity, WorkedExample) {
  EXPECT_NEAR(sample_complexity_real(worked_example()), 968.8351755973553, 1e-9);
  EXPECT_EQ(sample_complexity(worked_example()), 969u);
}

TEST(SampleComplexity, InfiniteSeparation) {
  auto in = worked_example();
  in.k_theta = std::numeric_limits<double>::infinity();
  EXPECT_EQ(sample_complexity(in), 1u);
}

TEST(SampleComplexity, DoublingM) {
  auto in = worked_example();
  const double base = sample_complexity_real(in);
  in.n_params *= 2;
  EXPECT_NEAR(sample_complexity_real(in) - base, 16 * 2.0 * std::log(2.0) / (0.25 * 0.7), 1e-9);
}

TEST(SampleComplexity, RejectsOutOfRange) {
  auto in = worked_example();
  in.delta = 1.5;
  EXPECT_THROW(sample_complexity(in), Error);
  in = worked_example();
  in.lambda_max = 1.0;
  EXPECT_THROW(sample_complexity(in), Error);
  in = worked_example();
  in.k_theta = 0.0;
  EXPECT_THROW(sample_complexity(in), Error);
}

TEST(RiskBound, Examples) {
  EXPECT_NEAR(risk_bound(1.0, 0.04), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(risk_bound(1.0, 0.0), 0.0);
  EXPECT_NEAR(risk_bound(2.0, 0.25), 0.5, 1e-15);
}

TEST(RiskGap, BernoulliClosedForm) {
  const ModelList models{make_bernoulli(ProbabilityLink::kIdentity,
                                        InstanceDistribution::discrete({vec({1.0})}, {1.0}),
                                        vec({0.9}), false)};
  const ParameterSet theta({vec({0.9}), vec({0.5})});
  const RiskFunction r = [](const Instance&, double y) { return y; };
  const std::vector<std::size_t> wrong{1};
  EXPECT_NEAR(empirical_risk_gap(models, theta, vec({0.9}), wrong, r, 10, 1), 0.4, 1e-14);
  const std::vector<std::size_t> right{0};
  EXPECT_NEAR(empirical_risk_gap(models, theta, vec({0.9}), right, r, 10, 1), 0.0, 1e-15);
}

TEST(RiskChain, OrderedTerms) {
  const ModelList models{
      make_bernoulli(ProbabilityLink::kLogistic,
                     InstanceDistribution::uniform_box(vec({-1}), vec({1})), vec({0.3, -0.4})),
      make_bernoulli(ProbabilityLink::kLogistic,
                     InstanceDistribution::uniform_box(vec({-1}), vec({1})), vec({0.3, -0.4}))};
  const ParameterSet theta({vec({0.3, -0.4}), vec({0.5, 0.0}), vec({-0.5, -1.0})});
  const RiskFunction r = [](const Instance&, double y) { return y; };
  const std::vector<std::size_t> est{1, 2};
  const auto c = risk_chain(models, theta, vec({0.3, -0.4}), est, r, 1.0, 5000, 4);
  EXPECT_GT(c.risk_gap, 0.0);
  EXPECT_LE(c.risk_gap, c.l1_term + 1e-12);
  EXPECT_LE(c.l1_term, c.pinsker_term + 1e-12);
  EXPECT_LE(c.pinsker_term, c.jensen_term + 1e-12);
  EXPECT_NEAR(c.jensen_term, std::sqrt(2 * c.mean_kl), 1e-12);
}
