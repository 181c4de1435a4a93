#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "p2pfl/beliefs.hpp"
#include "p2pfl/gaussian.hpp"
#include "p2pfl/graph.hpp"
#include "p2pfl/models.hpp"
#include "p2pfl/theory.hpp"

namespace p2pfl {

enum class Engine { kDiscrete, kGaussian };

/// One delivered public belief: `sender`'s belief produced in
/// `payload_round`, consumed by `receiver` during `round`.
struct Message {
  std::size_t round = 0;
  std::size_t sender = 0;
  std::size_t receiver = 0;
  std::size_t payload_round = 0;
};

/// Regression test set. Generated sets store noiseless targets f*(x) and
/// report the expected squared error over label noise (target error plus the
/// noise variance); explicit sets store observed labels.
class TestSet {
 public:
  static TestSet explicit_points(std::vector<Eigen::VectorXd> xs, std::vector<double> ys);
  /// `size` points with x uniform on [low, high], targets from `model`'s truth.
  static TestSet generate(const LinearGaussianModel& model, std::size_t size,
                          const Eigen::VectorXd& low, const Eigen::VectorXd& high,
                          std::uint64_t seed);

  std::size_t size() const noexcept { return size_; }
  double mse(const Eigen::VectorXd& mean) const;

 private:
  TestSet() = default;
  void accumulate(const Eigen::VectorXd& features, double label);

  std::size_t size_ = 0;
  Eigen::MatrixXd second_moment_;  // mean of x~ x~^T
  Eigen::VectorXd cross_moment_;   // mean of x~ y
  double label_moment_ = 0.0;      // mean of y^2
  double noise_floor_ = 0.0;
};

struct Scenario {
  explicit Scenario(WeightMatrix w) : graph(std::move(w)) {}

  WeightMatrix graph;
  /// false runs every node in isolation (private belief = public belief).
  bool cooperate = true;
  Engine engine = Engine::kDiscrete;
  ModelList models;

  // discrete engine
  std::optional<ParameterSet> theta_set;
  std::optional<BeliefVector> discrete_prior;  // uniform when empty

  // gaussian engine
  std::optional<GaussianBelief> gaussian_prior;
  std::optional<TestSet> test_set;
  bool run_baseline = false;

  std::size_t n_rounds = 1;
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;

  // theory inputs for the discrete engine
  double delta = 0.1;
  std::size_t mc_samples = 10000;

  bool record_trajectory = false;
  bool record_log_likelihoods = false;
  bool record_messages = false;
};

/// Throws kInvalidScenario for structural problems (model count, missing
/// engine inputs, dimension mismatches).
void validate_scenario(const Scenario& scenario);

/// Discrete-belief state of every node, advanced one synchronous round at a
/// time. All public beliefs of a round exist before any private update reads
/// them.
class DiscreteNetwork {
 public:
  DiscreteNetwork(const WeightMatrix& w, bool cooperate, std::vector<BeliefVector> priors);

  /// log_likelihoods[i] is node i's likelihood vector for its round sample.
  void step(std::span<const Eigen::VectorXd> log_likelihoods,
            std::vector<Message>* log = nullptr);

  std::size_t round() const noexcept { return round_; }
  const std::vector<BeliefVector>& privates() const noexcept { return privates_; }
  const std::vector<BeliefVector>& publics() const noexcept { return publics_; }
  std::vector<std::size_t> estimates() const;
  std::size_t clamp_events() const noexcept { return clamp_events_; }

 private:
  const WeightMatrix* w_;
  bool cooperate_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::vector<BeliefVector> privates_;
  std::vector<BeliefVector> publics_;
  std::vector<std::size_t> public_round_;
  std::size_t round_ = 0;
  std::size_t clamp_events_ = 0;
};

/// Gaussian counterpart of DiscreteNetwork for linear-Gaussian nodes.
class GaussianNetwork {
 public:
  GaussianNetwork(const WeightMatrix& w, bool cooperate, std::vector<GaussianBelief> priors);

  /// features[i] is node i's augmented regressor, labels[i] its label.
  void step(std::span<const Eigen::VectorXd> features, std::span<const double> labels,
            std::span<const double> noise_vars, std::vector<Message>* log = nullptr);

  std::size_t round() const noexcept { return round_; }
  const std::vector<GaussianBelief>& privates() const noexcept { return privates_; }
  const std::vector<GaussianBelief>& publics() const noexcept { return publics_; }

 private:
  const WeightMatrix* w_;
  bool cooperate_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::vector<GaussianBelief> privates_;
  std::vector<GaussianBelief> publics_;
  std::vector<std::size_t> public_round_;
  std::size_t round_ = 0;
};

struct TrialResult {
  std::size_t trial = 0;
  std::size_t n_nodes = 0;

  // discrete engine
  std::vector<std::size_t> final_estimates;
  std::optional<bool> success;
  /// First round from which every node's estimate stays in Theta* through
  /// the last round; empty when the final round fails.
  std::optional<std::size_t> first_persistent_success;
  // [round][node], filled when record_trajectory
  std::vector<std::vector<std::size_t>> estimate_trajectory;
  std::vector<std::vector<Eigen::VectorXd>> log_belief_trajectory;  // normalised private log-weights
  std::vector<std::vector<Eigen::VectorXd>> log_likelihoods;  // record_log_likelihoods
  std::size_t clamp_events = 0;

  // gaussian engine
  std::vector<Eigen::VectorXd> final_means;
  std::vector<std::vector<Eigen::VectorXd>> mean_trajectory;
  std::vector<std::vector<Eigen::VectorXd>> sigma_diag_trajectory;
  std::vector<std::vector<double>> mse;  // [round][node], when a test set exists

  std::vector<Message> messages;
};

struct ScenarioAnalysis {
  SpectralSummary spectral;
  std::optional<SeparationTable> separation;
  std::optional<BoundInputs> bound_inputs;
  std::optional<std::uint64_t> theorem_rounds;
};

/// Spectral summary plus, for the discrete engine, the separation table and
/// the round count the sample-complexity bound prescribes (when the models
/// declare likelihood bounds).
ScenarioAnalysis analyze_scenario(const Scenario& scenario);

/// Runs one trial. `theta_star` (discrete engine) enables the success flags.
TrialResult run_trial(const Scenario& scenario, std::size_t trial,
                      const std::vector<std::size_t>* theta_star = nullptr);

/// One node observing a sample from the union of all nodes' instance boxes
/// each round; gaussian engine only.
TrialResult central_baseline(const Scenario& scenario, std::size_t trial);

struct ExperimentReport {
  ScenarioAnalysis analysis;
  std::vector<TrialResult> trials;
  std::vector<TrialResult> baselines;  // one per trial when run_baseline
  std::optional<double> empirical_error;
  std::optional<std::size_t> first_all_success_round;
  std::vector<std::vector<double>> mean_mse;  // [round][node]
  std::vector<double> mean_baseline_mse;      // [round]
};

/// `workers` threads split the trials; results are independent of it.
ExperimentReport run_experiment(const Scenario& scenario, std::size_t workers = 1);

}  // namespace p2pfl
