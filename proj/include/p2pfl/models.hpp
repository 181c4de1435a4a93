#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "p2pfl/rng.hpp"

namespace p2pfl {

using Parameter = Eigen::VectorXd;
using Instance = Eigen::VectorXd;

/// Finite parameter set: M >= 2 distinct points of a common dimension.
class ParameterSet {
 public:
  explicit ParameterSet(std::vector<Parameter> points);

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const Parameter& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Parameter>& points() const noexcept { return points_; }

  /// Regular grid over an axis-aligned box; `steps[k]` points along axis k
  /// (endpoints included). Row-major with the last axis varying fastest.
  static ParameterSet grid(const Eigen::VectorXd& low, const Eigen::VectorXd& high,
                           const std::vector<std::size_t>& steps);

 private:
  std::vector<Parameter> points_;
  std::size_t dimension_ = 0;
};

/// Instance law P_i over the local instance space. Masked coordinates of a
/// deficient node are expressed as degenerate ranges [0, 0].
class InstanceDistribution {
 public:
  static InstanceDistribution uniform_box(Eigen::VectorXd low, Eigen::VectorXd high);
  static InstanceDistribution discrete(std::vector<Instance> support,
                                       std::vector<double> probabilities);

  Instance sample(CounterRng& rng) const;
  std::size_t dimension() const noexcept { return dimension_; }
  bool is_box() const noexcept { return support_.empty(); }
  const Eigen::VectorXd& low() const noexcept { return low_; }
  const Eigen::VectorXd& high() const noexcept { return high_; }
  const std::vector<Instance>& support() const noexcept { return support_; }
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }

  /// Points at which any affine function of x attains its extremes (box
  /// corners or the discrete support).
  std::vector<Instance> extreme_points() const;

 private:
  InstanceDistribution() = default;

  std::size_t dimension_ = 0;
  Eigen::VectorXd low_, high_;
  std::vector<Instance> support_;
  std::vector<double> probabilities_;
};

struct LikelihoodBounds {
  double alpha = 0.0;  // lower bound on every likelihood value
  double upper = 0.0;  // upper bound L
  double log_ratio_bound() const;  // |log(L / alpha)|
};

using RiskFunction = std::function<double(const Instance&, double)>;

/// Local likelihood l_i(y; theta, x) of one node together with the node's
/// instance law P_i and its true label law f_i. The true law is a member of
/// the same family at parameter truth(), which need not lie in the finite
/// parameter set.
class LikelihoodModel {
 public:
  LikelihoodModel(InstanceDistribution instances, Parameter truth, bool intercept);
  virtual ~LikelihoodModel() = default;

  virtual std::string_view family() const = 0;
  virtual std::size_t parameter_dimension() const = 0;

  const InstanceDistribution& instances() const noexcept { return instances_; }
  const Parameter& truth() const noexcept { return truth_; }
  bool intercept() const noexcept { return intercept_; }

  /// [1, x] when the family has an intercept, x otherwise.
  Eigen::VectorXd features(const Instance& x) const;

  Instance sample_instance(CounterRng& rng) const { return instances_.sample(rng); }
  /// Draws y ~ f_i(. | x).
  virtual double sample_label(const Instance& x, CounterRng& rng) const = 0;

  virtual double log_likelihood(double y, const Parameter& theta,
                                const Instance& x) const = 0;

  /// D_KL( l(.; p, x) || l(.; q, x) ). Throws kUnboundedKL on support mismatch.
  virtual double conditional_kl(const Instance& x, const Parameter& p,
                                const Parameter& q) const = 0;
  /// Integral over y of |l(y; p, x) - l(y; q, x)|.
  virtual double l1_distance(const Instance& x, const Parameter& p,
                             const Parameter& q) const = 0;
  /// Integral over y of fn(x, y) l(y; theta, x).
  virtual double expected_value(const Instance& x, const Parameter& theta,
                                const RiskFunction& fn) const = 0;

  /// Likelihood bounds over every theta in `theta_set` and every x in the
  /// instance space; empty for unbounded families.
  virtual std::optional<LikelihoodBounds> bounds(const ParameterSet& theta_set) const = 0;

  double kl_from_truth(const Instance& x, const Parameter& theta) const {
    return conditional_kl(x, truth_, theta);
  }

 protected:
  void check_parameter(const Parameter& theta) const;

 private:
  InstanceDistribution instances_;
  Parameter truth_;
  bool intercept_;
};

enum class ProbabilityLink { kLogistic, kIdentity };

/// Categorical labels y in {0, ..., K-1}. Parameters stack K-1 coefficient
/// blocks, one per non-reference class. Logistic link: softmax with class 0
/// logit fixed at 0. Identity link: p_k = <theta_k, x~> for k >= 1 and
/// p_0 = 1 - sum; probabilities outside [0, 1] are a model error.
class CategoricalModel final : public LikelihoodModel {
 public:
  CategoricalModel(std::size_t classes, ProbabilityLink link,
                   InstanceDistribution instances, Parameter truth, bool intercept = true);

  std::string_view family() const override {
    return classes_ == 2 ? "bernoulli" : "categorical";
  }
  std::size_t parameter_dimension() const override;
  std::size_t classes() const noexcept { return classes_; }
  ProbabilityLink link() const noexcept { return link_; }

  Eigen::VectorXd class_probabilities(const Parameter& theta, const Instance& x) const;

  double sample_label(const Instance& x, CounterRng& rng) const override;
  double log_likelihood(double y, const Parameter& theta, const Instance& x) const override;
  double conditional_kl(const Instance& x, const Parameter& p, const Parameter& q) const override;
  double l1_distance(const Instance& x, const Parameter& p, const Parameter& q) const override;
  double expected_value(const Instance& x, const Parameter& theta,
                        const RiskFunction& fn) const override;
  std::optional<LikelihoodBounds> bounds(const ParameterSet& theta_set) const override;

 private:
  std::size_t classes_;
  ProbabilityLink link_;
};

std::shared_ptr<CategoricalModel> make_bernoulli(ProbabilityLink link,
                                                 InstanceDistribution instances,
                                                 Parameter truth, bool intercept = true);

/// y = <theta, x~> + eta with eta ~ N(0, noise_std^2).
class LinearGaussianModel final : public LikelihoodModel {
 public:
  LinearGaussianModel(double noise_std, InstanceDistribution instances, Parameter truth,
                      bool intercept = true);

  std::string_view family() const override { return "gaussian"; }
  std::size_t parameter_dimension() const override;
  double noise_std() const noexcept { return noise_std_; }
  double noise_variance() const noexcept { return noise_std_ * noise_std_; }

  double sample_label(const Instance& x, CounterRng& rng) const override;
  double log_likelihood(double y, const Parameter& theta, const Instance& x) const override;
  double conditional_kl(const Instance& x, const Parameter& p, const Parameter& q) const override;
  double l1_distance(const Instance& x, const Parameter& p, const Parameter& q) const override;
  double expected_value(const Instance& x, const Parameter& theta,
                        const RiskFunction& fn) const override;
  std::optional<LikelihoodBounds> bounds(const ParameterSet&) const override {
    return std::nullopt;
  }

 private:
  double noise_std_;
};

using ModelList = std::vector<std::shared_ptr<const LikelihoodModel>>;

/// Shared Monte Carlo draws of x ~ P_i. Stream is keyed by (seed, node).
std::vector<Instance> draw_instances(const LikelihoodModel& model, std::size_t count,
                                     std::uint64_t seed, std::uint64_t node = 0);

/// Monte Carlo estimate of E_{P_i}[ D_KL(f_i(.|X) || l_i(.; theta, X)) ].
double expected_kl_to_truth(const LikelihoodModel& model, const Parameter& theta,
                            std::size_t mc_samples, std::uint64_t seed);

inline constexpr double kArgminTieTolerance = 1e-6;

struct SeparationTable {
  // separation[j](theta, psi) = I_j(theta, psi)
  std::vector<Eigen::MatrixXd> separation;
  // kl_to_truth[j](theta) = E_{P_j}[ D_KL(f_j || l_j(.; theta)) ]
  std::vector<Eigen::VectorXd> kl_to_truth;
  std::vector<std::vector<std::size_t>> theta_bar;
  std::vector<std::size_t> theta_star;
  double k_theta = 0.0;  // +inf when every parameter is globally learnable
  double k_theta_std_error = 0.0;

  bool in_theta_star(std::size_t index) const;
};

/// Throws kNotGloballyLearnable when the intersection of the local argmin sets
/// is empty.
SeparationTable separation_table(const ModelList& models, const ParameterSet& theta_set,
                                 const Eigen::VectorXd& stationary, std::size_t mc_samples,
                                 std::uint64_t seed);

struct CoveringReport {
  double radius = 0.0;  // requested r
  double worst_radius = 0.0;
  std::vector<double> sample_radius;      // min over theta of the average KL
  std::vector<std::size_t> nearest;       // argmin theta per sample
  std::vector<std::size_t> violations;    // indices into the sample list

  bool covered() const noexcept { return violations.empty(); }
};

CoveringReport verify_r_covering(std::span<const Parameter> phi_samples,
                                 const ParameterSet& theta_set, const ModelList& models,
                                 double r, std::size_t mc_samples, std::uint64_t seed);

}  // namespace p2pfl
