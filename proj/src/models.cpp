#include "p2pfl/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "p2pfl/error.hpp"

namespace p2pfl {
namespace {

constexpr double kDuplicateTolerance = 1e-12;
constexpr double kProbabilityTolerance = 1e-12;
constexpr std::uint64_t kInstanceStream = 0x696e7374616e6365ULL;  // "instance"

// Gauss-Hermite rule for the weight exp(-t^2), via Golub-Welsch.
struct HermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

const HermiteRule& hermite_rule() {
  static const HermiteRule rule = [] {
    constexpr int n = 48;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    HermiteRule r;
    r.nodes = solver.eigenvalues();
    r.weights = std::sqrt(std::numbers::pi) *
                solver.eigenvectors().row(0).transpose().array().square();
    return r;
  }();
  return rule;
}

double softplus_log_sum(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

}  // namespace

ParameterSet::ParameterSet(std::vector<Parameter> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw Error(ErrorCode::kInvalidParameterSet, "need at least two parameter points");
  }
  dimension_ = static_cast<std::size_t>(points_.front().size());
  if (dimension_ == 0) {
    throw Error(ErrorCode::kInvalidParameterSet, "parameter points must be non-empty");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (static_cast<std::size_t>(points_[i].size()) != dimension_) {
      throw Error(ErrorCode::kInvalidParameterSet,
                  "point " + std::to_string(i) + " has dimension " +
                      std::to_string(points_[i].size()) + ", expected " +
                      std::to_string(dimension_));
    }
    if (!points_[i].allFinite()) {
      throw Error(ErrorCode::kInvalidParameterSet,
                  "point " + std::to_string(i) + " is not finite");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((points_[i] - points_[j]).cwiseAbs().maxCoeff() <= kDuplicateTolerance) {
        throw Error(ErrorCode::kInvalidParameterSet,
                    "points " + std::to_string(j) + " and " + std::to_string(i) +
                        " coincide");
      }
    }
  }
}

ParameterSet ParameterSet::grid(const Eigen::VectorXd& low, const Eigen::VectorXd& high,
                                const std::vector<std::size_t>& steps) {
  const auto d = static_cast<std::size_t>(low.size());
  if (static_cast<std::size_t>(high.size()) != d || steps.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "grid bounds and steps disagree");
  }
  std::size_t total = 1;
  for (std::size_t s : steps) {
    if (s == 0) throw Error(ErrorCode::kInvalidParameterSet, "grid axis with no points");
    total *= s;
  }
  std::vector<Parameter> points;
  points.reserve(total);
  std::vector<std::size_t> index(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Parameter p(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      p(kk) = steps[k] == 1 ? low(kk)
                            : low(kk) + (high(kk) - low(kk)) * static_cast<double>(index[k]) /
                                            static_cast<double>(steps[k] - 1);
    }
    points.push_back(std::move(p));
    for (std::size_t k = d; k-- > 0;) {
      if (++index[k] < steps[k]) break;
      index[k] = 0;
    }
  }
  return ParameterSet(std::move(points));
}

InstanceDistribution InstanceDistribution::uniform_box(Eigen::VectorXd low,
                                                       Eigen::VectorXd high) {
  if (low.size() != high.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "instance box bounds differ in length");
  }
  for (Eigen::Index k = 0; k < low.size(); ++k) {
    if (!std::isfinite(low(k)) || !std::isfinite(high(k)) || low(k) > high(k)) {
      throw Error(ErrorCode::kInvalidModel,
                  "instance box coordinate " + std::to_string(k) + " is not a finite range");
    }
  }
  InstanceDistribution d;
  d.dimension_ = static_cast<std::size_t>(low.size());
  d.low_ = std::move(low);
  d.high_ = std::move(high);
  return d;
}

InstanceDistribution InstanceDistribution::discrete(std::vector<Instance> support,
                                                    std::vector<double> probabilities) {
  if (support.empty() || support.size() != probabilities.size()) {
    throw Error(ErrorCode::kInvalidModel,
                "discrete instance law needs one probability per support point");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidModel, "instance probabilities must be non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidModel, "instance probabilities must sum to 1");
  }
  InstanceDistribution d;
  d.dimension_ = static_cast<std::size_t>(support.front().size());
  for (const auto& x : support) {
    if (static_cast<std::size_t>(x.size()) != d.dimension_) {
      throw Error(ErrorCode::kDimensionMismatch, "instance support points differ in length");
    }
  }
  d.low_ = support.front();
  d.high_ = support.front();
  for (const auto& x : support) {
    d.low_ = d.low_.cwiseMin(x);
    d.high_ = d.high_.cwiseMax(x);
  }
  d.support_ = std::move(support);
  d.probabilities_ = std::move(probabilities);
  return d;
}

Instance InstanceDistribution::sample(CounterRng& rng) const {
  if (!support_.empty()) {
    if (support_.size() == 1) return support_.front();
    std::discrete_distribution<std::size_t> pick(probabilities_.begin(), probabilities_.end());
    return support_[pick(rng)];
  }
  Instance x(static_cast<Eigen::Index>(dimension_));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (low_(k) == high_(k)) {
      x(k) = low_(k);
    } else {
      x(k) = std::uniform_real_distribution<double>(low_(k), high_(k))(rng);
    }
  }
  return x;
}

std::vector<Instance> InstanceDistribution::extreme_points() const {
  if (!support_.empty()) return support_;
  std::vector<Instance> corners{low_};
  for (Eigen::Index k = 0; k < low_.size(); ++k) {
    if (low_(k) == high_(k)) continue;
    const std::size_t n = corners.size();
    for (std::size_t c = 0; c < n; ++c) {
      Instance flipped = corners[c];
      flipped(k) = high_(k);
      corners.push_back(std::move(flipped));
    }
  }
  return corners;
}

double LikelihoodBounds::log_ratio_bound() const { return std::abs(std::log(upper / alpha)); }

LikelihoodModel::LikelihoodModel(InstanceDistribution instances, Parameter truth,
                                 bool intercept)
    : instances_(std::move(instances)), truth_(std::move(truth)), intercept_(intercept) {
  if (!truth_.allFinite()) {
    throw Error(ErrorCode::kInvalidModel, "true parameter must be finite");
  }
}

Eigen::VectorXd LikelihoodModel::features(const Instance& x) const {
  if (!intercept_) return x;
  Eigen::VectorXd f(x.size() + 1);
  f(0) = 1.0;
  f.tail(x.size()) = x;
  return f;
}

void LikelihoodModel::check_parameter(const Parameter& theta) const {
  if (static_cast<std::size_t>(theta.size()) != parameter_dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "parameter of dimension " + std::to_string(theta.size()) +
                    " given to a " + std::string(family()) + " model expecting " +
                    std::to_string(parameter_dimension()));
  }
}

// ---------------------------------------------------------------------------

CategoricalModel::CategoricalModel(std::size_t classes, ProbabilityLink link,
                                   InstanceDistribution instances, Parameter truth,
                                   bool intercept)
    : LikelihoodModel(std::move(instances), std::move(truth), intercept),
      classes_(classes),
      link_(link) {
  if (classes_ < 2) throw Error(ErrorCode::kInvalidModel, "need at least two label classes");
  check_parameter(this->truth());
  // Surfaces an invalid identity-link truth early.
  for (const auto& x : this->instances().extreme_points()) {
    class_probabilities(this->truth(), x);
  }
}

std::size_t CategoricalModel::parameter_dimension() const {
  return (classes_ - 1) * (instances().dimension() + (intercept() ? 1 : 0));
}

Eigen::VectorXd CategoricalModel::class_probabilities(const Parameter& theta,
                                                      const Instance& x) const {
  check_parameter(theta);
  const Eigen::VectorXd f = features(x);
  const Eigen::Index block = f.size();
  Eigen::VectorXd scores(static_cast<Eigen::Index>(classes_));
  scores(0) = 0.0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    scores(k) = theta.segment((k - 1) * block, block).dot(f);
  }
  if (link_ == ProbabilityLink::kLogistic) {
    return (scores.array() - softplus_log_sum(scores)).exp();
  }
  Eigen::VectorXd p = scores;
  p(0) = 1.0 - scores.tail(scores.size() - 1).sum();
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) < -kProbabilityTolerance || p(k) > 1.0 + kProbabilityTolerance) {
      throw Error(ErrorCode::kInvalidModel,
                  "identity link produced probability " + std::to_string(p(k)) +
                      " for class " + std::to_string(k));
    }
    p(k) = std::clamp(p(k), 0.0, 1.0);
  }
  return p;
}

double CategoricalModel::sample_label(const Instance& x, CounterRng& rng) const {
  const Eigen::VectorXd p = class_probabilities(truth(), x);
  std::discrete_distribution<std::size_t> pick(p.data(), p.data() + p.size());
  return static_cast<double>(pick(rng));
}

double CategoricalModel::log_likelihood(double y, const Parameter& theta,
                                        const Instance& x) const {
  const auto label = static_cast<Eigen::Index>(y);
  if (label < 0 || static_cast<std::size_t>(label) >= classes_ ||
      static_cast<double>(label) != y) {
    throw Error(ErrorCode::kInvalidInputs, "label " + std::to_string(y) + " out of range");
  }
  return std::log(class_probabilities(theta, x)(label));
}

double CategoricalModel::conditional_kl(const Instance& x, const Parameter& p,
                                        const Parameter& q) const {
  const Eigen::VectorXd a = class_probabilities(p, x);
  const Eigen::VectorXd b = class_probabilities(q, x);
  double kl = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) == 0.0) continue;
    if (b(k) == 0.0) {
      throw Error(ErrorCode::kUnboundedKL,
                  "label " + std::to_string(k) + " has positive true mass but zero likelihood");
    }
    kl += a(k) * std::log(a(k) / b(k));
  }
  return std::max(kl, 0.0);
}

double CategoricalModel::l1_distance(const Instance& x, const Parameter& p,
                                     const Parameter& q) const {
  return (class_probabilities(p, x) - class_probabilities(q, x)).cwiseAbs().sum();
}

double CategoricalModel::expected_value(const Instance& x, const Parameter& theta,
                                        const RiskFunction& fn) const {
  const Eigen::VectorXd p = class_probabilities(theta, x);
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) total += p(k) * fn(x, static_cast<double>(k));
  return total;
}

std::optional<LikelihoodBounds> CategoricalModel::bounds(const ParameterSet& theta_set) const {
  // Minimum class probability over a box or finite support is attained at an
  // extreme point for both links. The maximum is exact for K = 2 and for the
  // identity link; for softmax with K > 2 it is bounded above through the
  // per-class minima of the logit differences.
  const auto extremes = instances().extreme_points();
  double alpha = std::numeric_limits<double>::infinity();
  double upper = 0.0;
  for (const auto& theta : theta_set.points()) {
    for (const auto& x : extremes) {
      const Eigen::VectorXd p = class_probabilities(theta, x);
      alpha = std::min(alpha, p.minCoeff());
      upper = std::max(upper, p.maxCoeff());
    }
    if (link_ == ProbabilityLink::kLogistic && classes_ > 2) {
      const Eigen::Index block = static_cast<Eigen::Index>(parameter_dimension() / (classes_ - 1));
      for (std::size_t k = 0; k < classes_; ++k) {
        double denom = 1.0;
        for (std::size_t j = 0; j < classes_; ++j) {
          if (j == k) continue;
          double lowest = std::numeric_limits<double>::infinity();
          for (const auto& x : extremes) {
            const Eigen::VectorXd f = features(x);
            const double zj = j == 0 ? 0.0 : theta.segment((static_cast<Eigen::Index>(j) - 1) * block, block).dot(f);
            const double zk = k == 0 ? 0.0 : theta.segment((static_cast<Eigen::Index>(k) - 1) * block, block).dot(f);
            lowest = std::min(lowest, zj - zk);
          }
          denom += std::exp(lowest);
        }
        upper = std::max(upper, 1.0 / denom);
      }
    }
  }
  if (!(alpha > 0.0)) return std::nullopt;
  return LikelihoodBounds{alpha, upper};
}

std::shared_ptr<CategoricalModel> make_bernoulli(ProbabilityLink link,
                                                 InstanceDistribution instances,
                                                 Parameter truth, bool intercept) {
  return std::make_shared<CategoricalModel>(2, link, std::move(instances), std::move(truth),
                                            intercept);
}

// ---------------------------------------------------------------------------

LinearGaussianModel::LinearGaussianModel(double noise_std, InstanceDistribution instances,
                                         Parameter truth, bool intercept)
    : LikelihoodModel(std::move(instances), std::move(truth), intercept),
      noise_std_(noise_std) {
  if (!(noise_std_ > 0.0) || !std::isfinite(noise_std_)) {
    throw Error(ErrorCode::kInvalidModel, "noise standard deviation must be positive");
  }
  check_parameter(this->truth());
}

std::size_t LinearGaussianModel::parameter_dimension() const {
  return instances().dimension() + (intercept() ? 1 : 0);
}

double LinearGaussianModel::sample_label(const Instance& x, CounterRng& rng) const {
  return truth().dot(features(x)) + noise_std_ * std::normal_distribution<double>()(rng);
}

double LinearGaussianModel::log_likelihood(double y, const Parameter& theta,
                                           const Instance& x) const {
  check_parameter(theta);
  const double r = (y - theta.dot(features(x))) / noise_std_;
  return -0.5 * r * r - std::log(noise_std_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double LinearGaussianModel::conditional_kl(const Instance& x, const Parameter& p,
                                           const Parameter& q) const {
  check_parameter(p);
  check_parameter(q);
  const double gap = (p - q).dot(features(x));
  return gap * gap / (2.0 * noise_variance());
}

double LinearGaussianModel::l1_distance(const Instance& x, const Parameter& p,
                                        const Parameter& q) const {
  check_parameter(p);
  check_parameter(q);
  const double gap = std::abs((p - q).dot(features(x)));
  return 2.0 * std::erf(gap / (2.0 * std::numbers::sqrt2 * noise_std_));
}

double LinearGaussianModel::expected_value(const Instance& x, const Parameter& theta,
                                           const RiskFunction& fn) const {
  check_parameter(theta);
  const HermiteRule& rule = hermite_rule();
  const double mean = theta.dot(features(x));
  double total = 0.0;
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    total += rule.weights(k) * fn(x, mean + std::numbers::sqrt2 * noise_std_ * rule.nodes(k));
  }
  return total / std::sqrt(std::numbers::pi);
}

// ---------------------------------------------------------------------------

std::vector<Instance> draw_instances(const LikelihoodModel& model, std::size_t count,
                                     std::uint64_t seed, std::uint64_t node) {
  CounterRng rng{seed, kInstanceStream, node};
  std::vector<Instance> xs;
  xs.reserve(count);
  for (std::size_t s = 0; s < count; ++s) xs.push_back(model.sample_instance(rng));
  return xs;
}

double expected_kl_to_truth(const LikelihoodModel& model, const Parameter& theta,
                            std::size_t mc_samples, std::uint64_t seed) {
  if (mc_samples == 0) throw Error(ErrorCode::kInvalidInputs, "mc_samples must be >= 1");
  double total = 0.0;
  for (const auto& x : draw_instances(model, mc_samples, seed)) {
    total += model.kl_from_truth(x, theta);
  }
  return total / static_cast<double>(mc_samples);
}

bool SeparationTable::in_theta_star(std::size_t index) const {
  return std::find(theta_star.begin(), theta_star.end(), index) != theta_star.end();
}

SeparationTable separation_table(const ModelList& models, const ParameterSet& theta_set,
                                 const Eigen::VectorXd& stationary, std::size_t mc_samples,
                                 std::uint64_t seed) {
  const std::size_t n = models.size();
  const std::size_t m = theta_set.size();
  if (n == 0 || static_cast<std::size_t>(stationary.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need one model per entry of the stationary vector");
  }
  if (mc_samples == 0) throw Error(ErrorCode::kInvalidInputs, "mc_samples must be >= 1");

  SeparationTable table;
  // Per-sample KL values, kept to estimate the standard error of K.
  std::vector<Eigen::MatrixXd> per_sample(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto xs = draw_instances(*models[j], mc_samples, seed, j);
    Eigen::MatrixXd kl(static_cast<Eigen::Index>(mc_samples), static_cast<Eigen::Index>(m));
    for (std::size_t s = 0; s < mc_samples; ++s) {
      for (std::size_t t = 0; t < m; ++t) {
        kl(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
            models[j]->kl_from_truth(xs[s], theta_set[t]);
      }
    }
    Eigen::VectorXd mean = kl.colwise().mean().transpose();
    Eigen::MatrixXd sep(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index a = 0; a < sep.rows(); ++a) {
      for (Eigen::Index b = 0; b < sep.cols(); ++b) sep(a, b) = mean(b) - mean(a);
    }
    const double best = mean.minCoeff();
    std::vector<std::size_t> bar;
    for (std::size_t t = 0; t < m; ++t) {
      if (mean(static_cast<Eigen::Index>(t)) <= best + kArgminTieTolerance) bar.push_back(t);
    }
    table.separation.push_back(std::move(sep));
    table.kl_to_truth.push_back(std::move(mean));
    table.theta_bar.push_back(std::move(bar));
    per_sample[j] = std::move(kl);
  }

  for (std::size_t t : table.theta_bar.front()) {
    const bool everywhere = std::all_of(table.theta_bar.begin(), table.theta_bar.end(),
                                        [t](const auto& bar) {
                                          return std::find(bar.begin(), bar.end(), t) != bar.end();
                                        });
    if (everywhere) table.theta_star.push_back(t);
  }
  if (table.theta_star.empty()) {
    std::string detail = "no parameter minimises every node's expected KL (";
    for (std::size_t j = 0; j < n; ++j) {
      detail += "node " + std::to_string(j) + " argmin {";
      for (std::size_t k = 0; k < table.theta_bar[j].size(); ++k) {
        detail += (k ? "," : "") + std::to_string(table.theta_bar[j][k]);
      }
      detail += j + 1 < n ? "}; " : "}";
    }
    throw Error(ErrorCode::kNotGloballyLearnable, detail + "); global learnability fails");
  }

  table.k_theta = std::numeric_limits<double>::infinity();
  std::size_t arg_theta = 0, arg_psi = 0;
  for (std::size_t theta : table.theta_star) {
    for (std::size_t psi = 0; psi < m; ++psi) {
      if (table.in_theta_star(psi)) continue;
      double rate = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        rate += stationary(static_cast<Eigen::Index>(j)) *
                table.separation[j](static_cast<Eigen::Index>(theta), static_cast<Eigen::Index>(psi));
      }
      if (rate < table.k_theta) {
        table.k_theta = rate;
        arg_theta = theta;
        arg_psi = psi;
      }
    }
  }
  if (std::isfinite(table.k_theta)) {
    double variance = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd diff =
          per_sample[j].col(static_cast<Eigen::Index>(arg_psi)) -
          per_sample[j].col(static_cast<Eigen::Index>(arg_theta));
      const double s2 = mc_samples > 1 ? (diff.array() - diff.mean()).square().sum() /
                                             static_cast<double>(mc_samples - 1)
                                       : 0.0;
      const double vj = stationary(static_cast<Eigen::Index>(j));
      variance += vj * vj * s2 / static_cast<double>(mc_samples);
    }
    table.k_theta_std_error = std::sqrt(variance);
  }
  return table;
}

CoveringReport verify_r_covering(std::span<const Parameter> phi_samples,
                                 const ParameterSet& theta_set, const ModelList& models,
                                 double r, std::size_t mc_samples, std::uint64_t seed) {
  if (models.empty()) throw Error(ErrorCode::kInvalidInputs, "no models");
  if (mc_samples == 0) throw Error(ErrorCode::kInvalidInputs, "mc_samples must be >= 1");
  std::vector<std::vector<Instance>> xs;
  for (std::size_t i = 0; i < models.size(); ++i) {
    xs.push_back(draw_instances(*models[i], mc_samples, seed, i));
  }
  CoveringReport report;
  report.radius = r;
  const double scale = 1.0 / static_cast<double>(models.size() * mc_samples);
  for (std::size_t s = 0; s < phi_samples.size(); ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nearest = 0;
    for (std::size_t t = 0; t < theta_set.size(); ++t) {
      double avg = 0.0;
      for (std::size_t i = 0; i < models.size(); ++i) {
        for (const auto& x : xs[i]) {
          avg += models[i]->conditional_kl(x, theta_set[t], phi_samples[s]);
        }
      }
      avg *= scale;
      if (avg < best) {
        best = avg;
        nearest = t;
      }
    }
    report.sample_radius.push_back(best);
    report.nearest.push_back(nearest);
    report.worst_radius = std::max(report.worst_radius, best);
    if (best > r) report.violations.push_back(s);
  }
  return report;
}

}  // namespace p2pfl
