#include "p2pfl/theory.hpp"

#include <cmath>
#include <string>

#include "p2pfl/error.hpp"

namespace p2pfl {

void validate(const BoundInputs& in) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidInputs, what); };
  if (in.n_nodes < 1) fail("n_nodes must be >= 1");
  if (in.n_params < 1) fail("n_params must be >= 1");
  if (!(in.delta > 0.0 && in.delta < 1.0)) fail("delta must lie in (0, 1)");
  if (!(in.log_ratio_bound > 0.0) || !std::isfinite(in.log_ratio_bound)) {
    fail("C must be positive and finite");
  }
  if (!(in.k_theta > 0.0)) fail("K(Theta) must be positive");
  if (!(in.lambda_max >= 0.0 && in.lambda_max < 1.0)) fail("lambda_max must lie in [0, 1)");
}

double sample_complexity_real(const BoundInputs& in) {
  validate(in);
  if (std::isinf(in.k_theta)) return 1.0;
  const double nm = static_cast<double>(in.n_nodes) * static_cast<double>(in.n_params);
  return 16.0 * in.log_ratio_bound * std::log(nm / in.delta) /
         (in.k_theta * in.k_theta * (1.0 - in.lambda_max));
}

std::uint64_t sample_complexity(const BoundInputs& in) {
  const double n = std::ceil(sample_complexity_real(in));
  return n < 1.0 ? 1 : static_cast<std::uint64_t>(n);
}

double risk_bound(double b, double r) {
  if (!(b >= 0.0) || !(r >= 0.0)) {
    throw Error(ErrorCode::kInvalidInputs, "risk bound needs B >= 0 and r >= 0");
  }
  return b * std::sqrt(r) / 2.0;
}

namespace {

void check_estimates(const ModelList& models, const ParameterSet& theta_set,
                     std::span<const std::size_t> estimates, std::size_t mc_samples) {
  if (models.empty() || estimates.size() != models.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "need one estimate per node");
  }
  for (std::size_t e : estimates) {
    if (e >= theta_set.size()) throw Error(ErrorCode::kInvalidInputs, "estimate index out of range");
  }
  if (mc_samples == 0) throw Error(ErrorCode::kInvalidInputs, "mc_samples must be >= 1");
}

}  // namespace

double empirical_risk_gap(const ModelList& models, const ParameterSet& theta_set,
                          const Parameter& theta_star,
                          std::span<const std::size_t> estimates, const RiskFunction& risk,
                          std::size_t mc_samples, std::uint64_t seed) {
  check_estimates(models, theta_set, estimates, mc_samples);
  double total = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const Parameter& est = theta_set[estimates[i]];
    double diff = 0.0;
    for (const auto& x : draw_instances(*models[i], mc_samples, seed, i)) {
      diff += models[i]->expected_value(x, theta_star, risk) -
              models[i]->expected_value(x, est, risk);
    }
    total += std::abs(diff / static_cast<double>(mc_samples));
  }
  return total / static_cast<double>(models.size());
}

RiskChain risk_chain(const ModelList& models, const ParameterSet& theta_set,
                     const Parameter& theta_star, std::span<const std::size_t> estimates,
                     const RiskFunction& risk, double b, std::size_t mc_samples,
                     std::uint64_t seed) {
  check_estimates(models, theta_set, estimates, mc_samples);
  RiskChain chain;
  chain.risk_gap =
      empirical_risk_gap(models, theta_set, theta_star, estimates, risk, mc_samples, seed);
  const double per_draw = 1.0 / static_cast<double>(mc_samples);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const Parameter& est = theta_set[estimates[i]];
    for (const auto& x : draw_instances(*models[i], mc_samples, seed, i)) {
      const double kl = models[i]->conditional_kl(x, theta_star, est);
      chain.l1_term += per_draw * models[i]->l1_distance(x, theta_star, est);
      chain.pinsker_term += per_draw * std::sqrt(2.0 * kl);
      chain.mean_kl += per_draw * kl;
    }
  }
  const double n = static_cast<double>(models.size());
  chain.l1_term *= b / n;
  chain.pinsker_term *= b / n;
  chain.mean_kl /= n;
  chain.jensen_term = b * std::sqrt(2.0 * chain.mean_kl);
  return chain;
}

}  // namespace p2pfl
