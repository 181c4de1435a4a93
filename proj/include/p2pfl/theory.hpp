#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "p2pfl/models.hpp"

namespace p2pfl {

struct BoundInputs {
  std::size_t n_nodes = 0;
  std::size_t n_params = 0;
  double delta = 0.0;
  double log_ratio_bound = 0.0;  // C = |log(L / alpha)|
  double k_theta = 0.0;          // +inf when nothing needs to be distinguished
  double lambda_max = 0.0;
};

/// Throws kInvalidInputs naming the first out-of-range field.
void validate(const BoundInputs& in);

/// Real-valued right-hand side 16 C log(N M / delta) / (K^2 (1 - lambda_max)).
double sample_complexity_real(const BoundInputs& in);

/// Smallest integer number of rounds satisfying the bound; 1 when K is +inf.
std::uint64_t sample_complexity(const BoundInputs& in);

/// B sqrt(r) / 2.
double risk_bound(double b, double r);

/// Monte Carlo estimate of (1/N) sum_i |R_i(theta*) - R_i(estimate_i)| with
/// R_i(theta) = E_{P_i}[ integral r(x, y) l_i(y; theta, x) dy ]. Each node's
/// expectation uses one shared set of instance draws for both parameters.
double empirical_risk_gap(const ModelList& models, const ParameterSet& theta_set,
                          const Parameter& theta_star,
                          std::span<const std::size_t> estimates, const RiskFunction& risk,
                          std::size_t mc_samples, std::uint64_t seed);

/// Every intermediate quantity of the risk chain, estimated on shared draws.
/// Pinsker is taken in its standard form: integral |p - q| <= sqrt(2 KL).
struct RiskChain {
  double risk_gap = 0.0;      // (1/N) sum |R_i(theta*) - R_i(est_i)|
  double l1_term = 0.0;       // (B/N) sum E[ integral |l* - l_est| ]
  double pinsker_term = 0.0;  // (B/N) sum E[ sqrt(2 KL(l* || l_est)) ]
  double jensen_term = 0.0;   // B sqrt(2 (1/N) sum E[ KL(l* || l_est) ])
  double mean_kl = 0.0;       // (1/N) sum E[ KL(l* || l_est) ]
};

RiskChain risk_chain(const ModelList& models, const ParameterSet& theta_set,
                     const Parameter& theta_star, std::span<const std::size_t> estimates,
                     const RiskFunction& risk, double b, std::size_t mc_samples,
                     std::uint64_t seed);

}  // namespace p2pfl
