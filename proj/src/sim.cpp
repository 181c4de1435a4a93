#include "p2pfl/sim.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "p2pfl/error.hpp"
#include "p2pfl/rng.hpp"

namespace p2pfl {
namespace {

constexpr std::uint64_t kTestSetStream = 0x7465737473657421ULL;

std::string context(std::size_t trial, std::size_t round, std::size_t node) {
  return "trial " + std::to_string(trial) + " round " + std::to_string(round) + " node " +
         std::to_string(node);
}

std::vector<std::vector<std::size_t>> neighbour_lists(const WeightMatrix& w) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back(w.in_neighbours(i));
  return out;
}

const LinearGaussianModel& as_regression(const LikelihoodModel& model, std::size_t node) {
  const auto* regression = dynamic_cast<const LinearGaussianModel*>(&model);
  if (regression == nullptr) {
    throw Error(ErrorCode::kInvalidScenario,
                "node " + std::to_string(node) + " needs a gaussian model for the gaussian engine");
  }
  return *regression;
}

}  // namespace

// ---------------------------------------------------------------------------

TestSet TestSet::explicit_points(std::vector<Eigen::VectorXd> xs, std::vector<double> ys) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw Error(ErrorCode::kInvalidScenario, "test set needs one label per point");
  }
  TestSet t;
  for (std::size_t k = 0; k < xs.size(); ++k) t.accumulate(augment(xs[k]), ys[k]);
  return t;
}

TestSet TestSet::generate(const LinearGaussianModel& model, std::size_t size,
                          const Eigen::VectorXd& low, const Eigen::VectorXd& high,
                          std::uint64_t seed) {
  if (size == 0) throw Error(ErrorCode::kInvalidScenario, "test set size must be >= 1");
  const auto box = InstanceDistribution::uniform_box(low, high);
  if (box.dimension() + (model.intercept() ? 1 : 0) != model.parameter_dimension()) {
    throw Error(ErrorCode::kInvalidScenario, "test set box does not match the model");
  }
  CounterRng rng{seed, kTestSetStream};
  TestSet t;
  for (std::size_t k = 0; k < size; ++k) {
    const Eigen::VectorXd f = model.features(box.sample(rng));
    t.accumulate(f, model.truth().dot(f));
  }
  t.noise_floor_ = model.noise_variance();
  return t;
}

void TestSet::accumulate(const Eigen::VectorXd& features, double label) {
  if (size_ == 0) {
    second_moment_ = Eigen::MatrixXd::Zero(features.size(), features.size());
    cross_moment_ = Eigen::VectorXd::Zero(features.size());
  }
  ++size_;
  const double w = 1.0 / static_cast<double>(size_);
  // Running means keep the moments well scaled.
  second_moment_ += w * (features * features.transpose() - second_moment_);
  cross_moment_ += w * (features * label - cross_moment_);
  label_moment_ += w * (label * label - label_moment_);
}

double TestSet::mse(const Eigen::VectorXd& mean) const {
  if (mean.size() != cross_moment_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "test set dimension does not match the belief");
  }
  return label_moment_ - 2.0 * mean.dot(cross_moment_) + mean.dot(second_moment_ * mean) +
         noise_floor_;
}

// ---------------------------------------------------------------------------

void validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidScenario, what); };
  const std::size_t n = s.graph.size();
  if (s.models.size() != n) {
    fail("scenario has " + std::to_string(s.models.size()) + " models for " +
         std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.models[i]) fail("node " + std::to_string(i) + " has no model");
  }
  if (s.n_rounds < 1) fail("n_rounds must be >= 1");
  if (s.trials < 1) fail("trials must be >= 1");
  if (s.engine == Engine::kDiscrete) {
    if (!s.theta_set) fail("discrete engine needs a parameter set");
    for (std::size_t i = 0; i < n; ++i) {
      if (s.models[i]->parameter_dimension() != s.theta_set->dimension()) {
        fail("node " + std::to_string(i) + " model expects parameters of dimension " +
             std::to_string(s.models[i]->parameter_dimension()));
      }
    }
    if (s.discrete_prior && s.discrete_prior->size() != s.theta_set->size()) {
      fail("discrete prior does not match the parameter set");
    }
  } else {
    if (!s.gaussian_prior) fail("gaussian engine needs a prior");
    for (std::size_t i = 0; i < n; ++i) {
      const auto& model = as_regression(*s.models[i], i);
      if (!model.intercept() || model.parameter_dimension() != s.gaussian_prior->dimension()) {
        fail("node " + std::to_string(i) + " regression model does not match the prior");
      }
    }
  }
}

// ---------------------------------------------------------------------------

DiscreteNetwork::DiscreteNetwork(const WeightMatrix& w, bool cooperate,
                                 std::vector<BeliefVector> priors)
    : w_(&w),
      cooperate_(cooperate),
      neighbours_(neighbour_lists(w)),
      privates_(std::move(priors)),
      publics_(privates_),
      public_round_(privates_.size(), 0) {
  if (privates_.size() != w.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "need one prior per node");
  }
}

void DiscreteNetwork::step(std::span<const Eigen::VectorXd> log_likelihoods,
                           std::vector<Message>* log) {
  const std::size_t n = privates_.size();
  if (log_likelihoods.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "need one likelihood vector per node");
  }
  ++round_;
  // Local Bayesian step for every node, then the barrier.
  for (std::size_t i = 0; i < n; ++i) {
    publics_[i] = bayesian_update(privates_[i], log_likelihoods[i]);
    public_round_[i] = round_;
    if (publics_[i].clamped()) ++clamp_events_;
  }
  if (!cooperate_) {
    privates_ = publics_;
    return;
  }
  std::vector<WeightedBelief> inputs;
  for (std::size_t i = 0; i < n; ++i) {
    inputs.clear();
    for (std::size_t j : neighbours_[i]) {
      inputs.push_back({&publics_[j], (*w_)(i, j)});
      if (log != nullptr && j != i) log->push_back({round_, j, i, public_round_[j]});
    }
    privates_[i] = consensus_update(inputs);
    if (privates_[i].clamped()) ++clamp_events_;
  }
}

std::vector<std::size_t> DiscreteNetwork::estimates() const {
  std::vector<std::size_t> out;
  for (const auto& q : privates_) out.push_back(map_estimate(q));
  return out;
}

GaussianNetwork::GaussianNetwork(const WeightMatrix& w, bool cooperate,
                                 std::vector<GaussianBelief> priors)
    : w_(&w),
      cooperate_(cooperate),
      neighbours_(neighbour_lists(w)),
      privates_(std::move(priors)),
      publics_(privates_),
      public_round_(privates_.size(), 0) {
  if (privates_.size() != w.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "need one prior per node");
  }
}

void GaussianNetwork::step(std::span<const Eigen::VectorXd> features,
                           std::span<const double> labels, std::span<const double> noise_vars,
                           std::vector<Message>* log) {
  const std::size_t n = privates_.size();
  if (features.size() != n || labels.size() != n || noise_vars.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "need one observation per node");
  }
  ++round_;
  for (std::size_t i = 0; i < n; ++i) {
    publics_[i] =
        gaussian_bayes_update_features(privates_[i], features[i], labels[i], noise_vars[i]);
    public_round_[i] = round_;
  }
  if (!cooperate_) {
    privates_ = publics_;
    return;
  }
  std::vector<WeightedGaussian> inputs;
  for (std::size_t i = 0; i < n; ++i) {
    inputs.clear();
    for (std::size_t j : neighbours_[i]) {
      inputs.push_back({&publics_[j], (*w_)(i, j)});
      if (log != nullptr && j != i) log->push_back({round_, j, i, public_round_[j]});
    }
    privates_[i] = gaussian_consensus(inputs);
  }
}

// ---------------------------------------------------------------------------

ScenarioAnalysis analyze_scenario(const Scenario& s) {
  validate_scenario(s);
  ScenarioAnalysis a;
  a.spectral = spectral_gap(s.graph);
  if (s.engine != Engine::kDiscrete) return a;

  a.separation = separation_table(s.models, *s.theta_set, a.spectral.stationary,
                                  s.mc_samples, s.master_seed);
  double c = 0.0;
  for (const auto& model : s.models) {
    const auto b = model->bounds(*s.theta_set);
    if (!b) return a;
    c = std::max(c, b->log_ratio_bound());
  }
  BoundInputs in;
  in.n_nodes = s.graph.size();
  in.n_params = s.theta_set->size();
  in.delta = s.delta;
  in.log_ratio_bound = c;
  in.k_theta = a.separation->k_theta;
  in.lambda_max = a.spectral.lambda_max;
  a.bound_inputs = in;
  a.theorem_rounds = sample_complexity(in);
  return a;
}

namespace {

TrialResult run_discrete(const Scenario& s, std::size_t trial,
                         const std::vector<std::size_t>* theta_star) {
  const std::size_t n = s.graph.size();
  const ParameterSet& theta_set = *s.theta_set;
  const BeliefVector prior = s.discrete_prior ? *s.discrete_prior : uniform_prior(theta_set.size());
  DiscreteNetwork network(s.graph, s.cooperate, std::vector<BeliefVector>(n, prior));

  TrialResult result;
  result.trial = trial;
  result.n_nodes = n;
  auto in_star = [theta_star](std::size_t e) {
    return std::find(theta_star->begin(), theta_star->end(), e) != theta_star->end();
  };

  std::vector<Eigen::VectorXd> lls(n);
  std::size_t last_failure = 0;
  for (std::size_t k = 1; k <= s.n_rounds; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        CounterRng rng{s.master_seed, trial, i, k};
        const Instance x = s.models[i]->sample_instance(rng);
        const double y = s.models[i]->sample_label(x, rng);
        lls[i] = log_likelihood_vector(*s.models[i], theta_set, x, y);
      } catch (const Error& e) {
        throw e.with_context(context(trial, k, i));
      }
    }
    try {
      network.step(lls, s.record_messages ? &result.messages : nullptr);
    } catch (const Error& e) {
      throw e.with_context("trial " + std::to_string(trial) + " round " + std::to_string(k));
    }
    const auto estimates = network.estimates();
    if (theta_star != nullptr && !std::all_of(estimates.begin(), estimates.end(), in_star)) {
      last_failure = k;
    }
    if (s.record_log_likelihoods) result.log_likelihoods.push_back(lls);
    if (s.record_trajectory) {
      result.estimate_trajectory.push_back(estimates);
      std::vector<Eigen::VectorXd> beliefs;
      for (const auto& q : network.privates()) beliefs.push_back(q.log_weights());
      result.log_belief_trajectory.push_back(std::move(beliefs));
    }
  }
  result.final_estimates = network.estimates();
  result.clamp_events = network.clamp_events();
  if (theta_star != nullptr) {
    result.success = last_failure < s.n_rounds;
    if (*result.success) result.first_persistent_success = last_failure + 1;
  }
  return result;
}

void record_gaussian_round(const Scenario& s, std::span<const GaussianBelief> beliefs,
                           TrialResult& result) {
  if (s.test_set) {
    std::vector<double> mse;
    for (const auto& b : beliefs) mse.push_back(s.test_set->mse(b.mean()));
    result.mse.push_back(std::move(mse));
  }
  if (s.record_trajectory) {
    std::vector<Eigen::VectorXd> means, sigmas;
    for (const auto& b : beliefs) {
      means.push_back(b.mean());
      sigmas.push_back(b.covariance().diagonal());
    }
    result.mean_trajectory.push_back(std::move(means));
    result.sigma_diag_trajectory.push_back(std::move(sigmas));
  }
}

TrialResult run_gaussian(const Scenario& s, std::size_t trial) {
  const std::size_t n = s.graph.size();
  GaussianNetwork network(s.graph, s.cooperate,
                          std::vector<GaussianBelief>(n, *s.gaussian_prior));
  std::vector<const LinearGaussianModel*> models;
  std::vector<double> noise_vars;
  for (std::size_t i = 0; i < n; ++i) {
    models.push_back(&as_regression(*s.models[i], i));
    noise_vars.push_back(models.back()->noise_variance());
  }

  TrialResult result;
  result.trial = trial;
  result.n_nodes = n;
  std::vector<Eigen::VectorXd> features(n);
  std::vector<double> labels(n);
  for (std::size_t k = 1; k <= s.n_rounds; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      CounterRng rng{s.master_seed, trial, i, k};
      const Instance x = models[i]->sample_instance(rng);
      labels[i] = models[i]->sample_label(x, rng);
      features[i] = models[i]->features(x);
    }
    try {
      network.step(features, labels, noise_vars, s.record_messages ? &result.messages : nullptr);
    } catch (const Error& e) {
      throw e.with_context("trial " + std::to_string(trial) + " round " + std::to_string(k));
    }
    record_gaussian_round(s, network.privates(), result);
  }
  for (const auto& b : network.privates()) result.final_means.push_back(b.mean());
  return result;
}

}  // namespace

TrialResult run_trial(const Scenario& s, std::size_t trial,
                      const std::vector<std::size_t>* theta_star) {
  validate_scenario(s);
  return s.engine == Engine::kDiscrete ? run_discrete(s, trial, theta_star)
                                       : run_gaussian(s, trial);
}

TrialResult central_baseline(const Scenario& s, std::size_t trial) {
  validate_scenario(s);
  if (s.engine != Engine::kGaussian) {
    throw Error(ErrorCode::kInvalidScenario, "central baseline needs the gaussian engine");
  }
  const std::size_t n = s.graph.size();
  const auto& reference = as_regression(*s.models.front(), 0);
  Eigen::VectorXd low = reference.instances().low();
  Eigen::VectorXd high = reference.instances().high();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = s.models[i]->instances();
    if (!inst.is_box() || inst.dimension() != static_cast<std::size_t>(low.size())) {
      throw Error(ErrorCode::kInvalidScenario, "central baseline needs box instance laws");
    }
    low = low.cwiseMin(inst.low());
    high = high.cwiseMax(inst.high());
  }
  const auto union_box = InstanceDistribution::uniform_box(low, high);
  const LinearGaussianModel central(reference.noise_std(), union_box, reference.truth());

  TrialResult result;
  result.trial = trial;
  result.n_nodes = 1;
  GaussianBelief belief = *s.gaussian_prior;
  for (std::size_t k = 1; k <= s.n_rounds; ++k) {
    CounterRng rng{s.master_seed, trial, n, k};
    const Instance x = central.sample_instance(rng);
    const double y = central.sample_label(x, rng);
    belief = gaussian_bayes_update_features(belief, central.features(x), y,
                                            central.noise_variance());
    record_gaussian_round(s, std::span<const GaussianBelief>(&belief, 1), result);
  }
  result.final_means.push_back(belief.mean());
  return result;
}

ExperimentReport run_experiment(const Scenario& s, std::size_t workers) {
  ExperimentReport report;
  report.analysis = analyze_scenario(s);
  const std::vector<std::size_t>* theta_star =
      report.analysis.separation ? &report.analysis.separation->theta_star : nullptr;
  const bool baseline = s.run_baseline && s.engine == Engine::kGaussian;

  report.trials.resize(s.trials);
  if (baseline) report.baselines.resize(s.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t t = next++; t < s.trials; t = next++) {
      try {
        report.trials[t] = run_trial(s, t, theta_star);
        if (baseline) report.baselines[t] = central_baseline(s, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, s.trials);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  if (theta_star != nullptr) {
    std::size_t failures = 0;
    std::size_t first = 0;
    bool all = true;
    for (const auto& t : report.trials) {
      if (!*t.success) {
        ++failures;
        all = false;
      } else {
        first = std::max(first, *t.first_persistent_success);
      }
    }
    report.empirical_error = static_cast<double>(failures) / static_cast<double>(s.trials);
    if (all) report.first_all_success_round = first;
  }

  if (s.test_set) {
    const double scale = 1.0 / static_cast<double>(s.trials);
    report.mean_mse.assign(s.n_rounds, std::vector<double>(s.graph.size(), 0.0));
    for (const auto& t : report.trials) {
      for (std::size_t k = 0; k < s.n_rounds; ++k) {
        for (std::size_t i = 0; i < s.graph.size(); ++i) {
          report.mean_mse[k][i] += scale * t.mse[k][i];
        }
      }
    }
    if (baseline) {
      report.mean_baseline_mse.assign(s.n_rounds, 0.0);
      for (const auto& b : report.baselines) {
        for (std::size_t k = 0; k < s.n_rounds; ++k) {
          report.mean_baseline_mse[k] += scale * b.mse[k][0];
        }
      }
    }
  }
  return report;
}

}  // namespace p2pfl
