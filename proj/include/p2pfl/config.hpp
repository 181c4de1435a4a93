#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>
#include "json.hpp"

#include "p2pfl/sim.hpp"

namespace p2pfl {

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kValidation, kUnknownKey };

  ConfigError(Kind kind, std::string path, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  /// Dotted location of the offending value, e.g. "scenario.graph.weights[0]".
  /// For syntax errors, "byte <offset>".
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

std::string_view to_string(ConfigError::Kind kind);

struct OutputConfig {
  std::string dir = "out";
  std::string format = "csv";  // csv | json
};

/// Explicit sample-complexity inputs; missing ones are derived from the
/// scenario.
struct BoundOverrides {
  std::optional<std::size_t> n_nodes;
  std::optional<std::size_t> n_params;
  std::optional<double> log_ratio_bound;  // "C"
  std::optional<double> k_theta;          // may be +inf
  std::optional<double> lambda_max;
};

struct TestSetSpec {
  std::size_t size = 1000;
  Eigen::VectorXd low, high;
};

struct ConfigDocument {
  explicit ConfigDocument(Scenario s) : scenario(std::move(s)) {}

  int schema_version = 1;
  /// Validated input document; serialises canonically (sorted keys).
  nlohmann::json tree;
  /// Scenario as configured; models are empty when the config lists no nodes.
  Scenario scenario;
  std::size_t horizon = 100;
  BoundOverrides bound;
  std::optional<TestSetSpec> test_set_spec;
  std::optional<std::vector<std::pair<Eigen::VectorXd, double>>> test_points;
  OutputConfig output;

  bool has_nodes() const noexcept { return !scenario.models.empty(); }
};

/// Parses and fully validates a JSON config. Throws ConfigError.
ConfigDocument parse_config(std::string_view text);

/// Canonical JSON text of the validated document.
std::string serialize_config(const ConfigDocument& doc);

/// Copy of the scenario ready for simulation: requires nodes and materialises
/// the regression test set from the (possibly overridden) seed.
Scenario runnable_scenario(const ConfigDocument& doc);

}  // namespace p2pfl
