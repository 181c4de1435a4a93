#include <string>

#include <gtest/gtest.h>

#include "p2pfl/config.hpp"

using namespace p2pfl;

namespace {

const std::string kDiscrete = R"({
  "schema_version": 1,
  "scenario": {
    "graph": {"weights": [[0.9, 0.1], [0.6, 0.4]], "horizon": 50},
    "engine": "discrete",
    "parameters": [[0.9], [0.5], [0.1]],
    "nodes": [
      {"family": "bernoulli", "link": "identity", "intercept": false, "truth": [0.9],
       "instances": {"discrete": {"points": [[1.0]], "probabilities": [1.0]}}},
      {"family": "bernoulli", "link": "identity", "intercept": false, "truth": [0.9],
       "instances": {"discrete": {"points": [[1.0]], "probabilities": [1.0]}}}
    ],
    "rounds": 20, "trials": 3, "seed": 5, "delta": 0.1
  },
  "output": {"dir": "out", "format": "csv"}
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

ConfigError error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "config was accepted";
  return ConfigError(ConfigError::Kind::kSyntax, "", "");
}

}  // namespace

TEST(ParseConfig, MinimalDiscrete) {
  const auto doc = parse_config(kDiscrete);
  EXPECT_TRUE(doc.has_nodes());
  EXPECT_EQ(doc.scenario.graph.size(), 2u);
  EXPECT_EQ(doc.scenario.theta_set->size(), 3u);
  EXPECT_EQ(doc.scenario.n_rounds, 20u);
  EXPECT_EQ(doc.scenario.trials, 3u);
  EXPECT_EQ(doc.scenario.master_seed, 5u);
  EXPECT_EQ(doc.horizon, 50u);
}

TEST(ParseConfig, CanonicalRoundTrip) {
  const auto first = serialize_config(parse_config(kDiscrete));
  const auto second = serialize_config(parse_config(first));
  EXPECT_EQ(first, second);
}

TEST(ParseConfig, RowSumPath) {
  const auto e = error_of(replace(kDiscrete, "[0.9, 0.1]", "[1.0, 0.1]"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::kValidation);
  EXPECT_EQ(e.path(), "scenario.graph.weights[0]");
}

TEST(ParseConfig, DeltaPath) {
  const auto e = error_of(replace(kDiscrete, "\"delta\": 0.1", "\"delta\": 1.5"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::kValidation);
  EXPECT_EQ(e.path(), "scenario.delta");
}

TEST(ParseConfig, UnknownKey) {
  const auto e = error_of(replace(kDiscrete, "\"rounds\": 20", "\"round\": 20"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::kUnknownKey);
  EXPECT_EQ(e.path(), "scenario.round");
  const auto nested = error_of(replace(kDiscrete, "\"horizon\": 50", "\"horizon\": 50, \"x\": 1"));
  EXPECT_EQ(nested.path(), "scenario.graph.x");
}

TEST(ParseConfig, SchemaVersion) {
  const auto e = error_of(replace(kDiscrete, "\"schema_version\": 1", "\"schema_version\": 2"));
  EXPECT_EQ(e.path(), "schema_version");
}

TEST(ParseConfig, SyntaxErrorHasPosition) {
  const auto e = error_of("{\"schema_version\": 1,,}");
  EXPECT_EQ(e.kind(), ConfigError::Kind::kSyntax);
  EXPECT_EQ(e.path().rfind("byte ", 0), 0u);
}

TEST(ParseConfig, GraphStructure) {
  const auto e = error_of(replace(kDiscrete, "[[0.9, 0.1], [0.6, 0.4]]", "[[1, 0], [0, 1]]"));
  EXPECT_EQ(e.path(), "scenario.graph.weights");
  EXPECT_NE(std::string(e.what()).find("NotStronglyConnected"), std::string::npos);
}

TEST(ParseConfig, NodeErrors) {
  EXPECT_EQ(error_of(replace(kDiscrete, "\"family\": \"bernoulli\"", "\"family\": \"poisson\""))
                .path(),
            "scenario.nodes[0].family");
  EXPECT_EQ(error_of(replace(kDiscrete, "\"truth\": [0.9]", "\"truth\": \"high\"")).path(),
            "scenario.nodes[0].truth");
  EXPECT_EQ(error_of(replace(kDiscrete, "\"rounds\": 20", "\"rounds\": 0")).path(),
            "scenario.rounds");
  EXPECT_EQ(error_of(replace(kDiscrete, "\"format\": \"csv\"", "\"format\": \"xml\"")).path(),
            "output.format");
}

TEST(ParseConfig, GaussianWithDefaults) {
  const std::string text = R"({
    "schema_version": 1,
    "scenario": {
      "graph": {"weights": [[0.9, 0.1], [0.6, 0.4]]},
      "engine": "gaussian",
      "prior": {"mean": [0, 0], "covariance": [[1, 0], [0, 1]]},
      "nodes": [
        {"family": "gaussian", "noise_std": 0.5, "truth": [0.1, 0.2],
         "instances": {"uniform": {"low": [-1], "high": [1]}}},
        {"family": "gaussian", "noise_std": 0.5, "truth": [0.1, 0.2],
         "instances": {"uniform": {"low": [0], "high": [2]}}}
      ]
    }
  })";
  const auto doc = parse_config(text);
  const auto s = runnable_scenario(doc);
  ASSERT_TRUE(s.test_set.has_value());
  EXPECT_EQ(s.test_set->size(), 1000u);
  EXPECT_EQ(doc.output.format, "csv");
}

TEST(ParseConfig, BoundOverrides) {
  const auto doc = parse_config(replace(
      kDiscrete, "\"delta\": 0.1", "\"delta\": 0.1, \"bound\": {\"C\": 2, \"k_theta\": \"inf\"}"));
  EXPECT_DOUBLE_EQ(*doc.bound.log_ratio_bound, 2.0);
  EXPECT_TRUE(std::isinf(*doc.bound.k_theta));
  EXPECT_EQ(error_of(replace(kDiscrete, "\"delta\": 0.1",
                             "\"delta\": 0.1, \"bound\": {\"lambda_max\": 1.0}"))
                .path(),
            "scenario.bound.lambda_max");
}
