#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "p2pfl/error.hpp"
#include "p2pfl/graph.hpp"

using namespace p2pfl;

namespace {

WeightMatrix make(std::vector<std::vector<double>> rows) { return validate_weight_matrix(rows); }

ErrorCode code_of(std::vector<std::vector<double>> rows) {
  try {
    validate_weight_matrix(rows);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "matrix was accepted";
  return ErrorCode::kInvalidInputs;
}

}  // namespace

TEST(ValidateWeightMatrix, AcceptsTwoNodeExample) {
  const auto w = make({{0.9, 0.1}, {0.6, 0.4}});
  EXPECT_EQ(w.size(), 2u);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.6);
  EXPECT_EQ(w.in_neighbours(0), (std::vector<std::size_t>{0, 1}));
}

TEST(ValidateWeightMatrix, Rejections) {
  EXPECT_EQ(code_of({{1, 0}, {0, 1}}), ErrorCode::kNotStronglyConnected);
  EXPECT_EQ(code_of({{0.5, 0.6}, {0.5, 0.5}}), ErrorCode::kNotStochastic);
  EXPECT_EQ(code_of({{1.5, -0.5}, {0.5, 0.5}}), ErrorCode::kNegativeWeight);
  EXPECT_EQ(code_of({{0, 1}, {1, 0}}), ErrorCode::kPeriodic);
  EXPECT_EQ(code_of({{0.5, 0.5}}), ErrorCode::kNotSquare);
  EXPECT_EQ(code_of({{NAN, 1}, {0.5, 0.5}}), ErrorCode::kNonFinite);
}

TEST(ValidateWeightMatrix, RowSumTolerance) {
  EXPECT_NO_THROW(make({{0.9 + 5e-10, 0.1}, {0.6, 0.4}}));
  EXPECT_EQ(code_of({{0.9 + 5e-9, 0.1}, {0.6, 0.4}}), ErrorCode::kNotStochastic);
}

TEST(ValidateWeightMatrix, NotStochasticNamesRow) {
  try {
    validate_weight_matrix(std::vector<std::vector<double>>{{0.5, 0.5}, {0.5, 0.6}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Stationary, TwoNodeExample) {
  const auto w = make({{0.9, 0.1}, {0.6, 0.4}});
  for (auto method : {StationaryMethod::kDirect, StationaryMethod::kPowerIteration}) {
    const auto v = stationary_distribution(w, method);
    EXPECT_NEAR(v(0), 6.0 / 7.0, 1e-12);
    EXPECT_NEAR(v(1), 1.0 / 7.0, 1e-12);
  }
}

TEST(Stationary, SymmetricIsUniform) {
  const auto v = stationary_distribution(make({{0.25, 0.75}, {0.75, 0.25}}));
  EXPECT_NEAR(v(0), 0.5, 1e-12);
  EXPECT_NEAR(v(1), 0.5, 1e-12);
}

TEST(Stationary, DoublyStochasticIsUniform) {
  const auto v = stationary_distribution(
      make({{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.3, 0.2, 0.5}}));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(v(i), 1.0 / 3.0, 1e-12);
}

TEST(Stationary, ExperimentMatrix) {
  // v0 * 0.55 = v1 * 0.70
  const auto v = stationary_distribution(make({{0.45, 0.55}, {0.70, 0.30}}));
  EXPECT_NEAR(v(0), 0.56, 1e-12);
  EXPECT_NEAR(v(1), 0.44, 1e-12);
}

TEST(SpectralGap, Examples) {
  const auto a = spectral_gap(make({{0.9, 0.1}, {0.6, 0.4}}));
  EXPECT_NEAR(a.lambda_max, 0.3, 1e-12);
  EXPECT_NEAR(a.mixing_bound, 3.9608410317711162, 1e-9);
  const auto b = spectral_gap(make({{0.25, 0.75}, {0.75, 0.25}}));
  EXPECT_NEAR(b.lambda_max, 0.5, 1e-12);
  EXPECT_NEAR(b.mixing_bound, 5.545177444479562, 1e-9);
}

TEST(SpectralGap, ComplexEigenvaluesUseModulus) {
  // Lazy directed 3-cycle: eigenvalues 1 and 0.5 + 0.5 e^{+-2 pi i / 3}.
  const auto s = spectral_gap(make({{0.5, 0.5, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}}));
  EXPECT_NEAR(s.lambda_max, 0.5, 1e-12);
}

TEST(SpectralGap, SingleNode) {
  const auto s = spectral_gap(make({{1.0}}));
  EXPECT_DOUBLE_EQ(s.lambda_max, 0.0);
  EXPECT_NEAR(s.stationary(0), 1.0, 1e-15);
}

TEST(MixingBound, TwoNodeExamples) {
  const auto a = verify_mixing_bound(make({{0.9, 0.1}, {0.6, 0.4}}), 100);
  EXPECT_TRUE(a.all_within());
  // Row i of W^k - 1 v equals 0.3^k times row i of (W - 1 v).
  EXPECT_NEAR(a.partial_sums[0], 2 * (1.0 / 7.0) * 0.3 / 0.7, 1e-12);
  EXPECT_NEAR(a.partial_sums[1], 2 * (6.0 / 7.0) * 0.3 / 0.7, 1e-12);
  const auto b = verify_mixing_bound(make({{0.25, 0.75}, {0.75, 0.25}}), 50);
  EXPECT_TRUE(b.all_within());
  EXPECT_NEAR(b.partial_sums[0], 1.0 - std::pow(0.5, 50), 1e-12);
  EXPECT_NEAR(b.bound, 5.545177444479562, 1e-9);
}

TEST(MixingBound, RankOneIsAlreadyMixed) {
  const auto r = verify_mixing_bound(make({{0.3, 0.7}, {0.3, 0.7}}), 20);
  EXPECT_TRUE(r.all_within());
  EXPECT_NEAR(r.partial_sums[0], 0.0, 1e-12);
  EXPECT_NEAR(r.partial_sums[1], 0.0, 1e-12);
}
