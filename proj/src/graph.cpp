#include "p2pfl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "p2pfl/error.hpp"

namespace p2pfl {
namespace {

constexpr std::size_t kDirectSolveLimit = 64;
constexpr std::size_t kPowerIterationCap = 1'000'000;
constexpr double kPowerResidual = 1e-12;

std::vector<bool> reachable_from_zero(const Eigen::MatrixXd& w, bool reverse) {
  const auto n = w.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index u = stack.back();
    stack.pop_back();
    for (Eigen::Index v = 0; v < n; ++v) {
      // Edge j -> i exists when W(i, j) > 0 (i listens to j).
      const double weight = reverse ? w(u, v) : w(v, u);
      if (weight > 0.0 && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

std::vector<std::size_t> WeightMatrix::in_neighbours(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if ((*this)(i, j) > 0.0) out.push_back(j);
  }
  return out;
}

std::vector<std::vector<double>> WeightMatrix::to_rows() const {
  std::vector<std::vector<double>> rows(size(), std::vector<double>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) rows[i][j] = (*this)(i, j);
  }
  return rows;
}

bool strongly_connected(const Eigen::MatrixXd& weights) {
  if (weights.rows() == 0) return false;
  for (bool reverse : {false, true}) {
    const auto seen = reachable_from_zero(weights, reverse);
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

std::size_t graph_period(const Eigen::MatrixXd& weights) {
  // BFS levels from node 0; for a strongly connected graph the period is the
  // gcd over all edges u -> v of level(u) + 1 - level(v).
  const auto n = weights.rows();
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  std::queue<Eigen::Index> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.front();
    frontier.pop();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (weights(v, u) > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      }
    }
  }
  long period = 0;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (weights(v, u) <= 0.0) continue;
      const long lu = level[static_cast<std::size_t>(u)];
      const long lv = level[static_cast<std::size_t>(v)];
      if (lu < 0 || lv < 0) continue;
      period = std::gcd(period, std::labs(lu + 1 - lv));
    }
  }
  return static_cast<std::size_t>(period);
}

WeightMatrix validate_weight_matrix(const Eigen::MatrixXd& raw) {
  if (raw.rows() == 0 || raw.rows() != raw.cols()) {
    std::ostringstream msg;
    msg << "weight matrix must be square and non-empty, got " << raw.rows()
        << "x" << raw.cols();
    throw Error(ErrorCode::kNotSquare, msg.str());
  }
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      if (!std::isfinite(raw(i, j))) {
        throw Error(ErrorCode::kNonFinite,
                    "row " + std::to_string(i) + " column " + std::to_string(j));
      }
      if (raw(i, j) < 0.0) {
        throw Error(ErrorCode::kNegativeWeight,
                    "row " + std::to_string(i) + " column " + std::to_string(j));
      }
    }
    const double sum = raw.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " sums to " << sum;
      throw Error(ErrorCode::kNotStochastic, msg.str());
    }
  }
  if (!strongly_connected(raw)) {
    throw Error(ErrorCode::kNotStronglyConnected,
                "the directed graph of positive weights is not strongly connected");
  }
  if (const std::size_t period = graph_period(raw); period != 1) {
    throw Error(ErrorCode::kPeriodic,
                "chain has period " + std::to_string(period));
  }
  return WeightMatrix(raw);
}

WeightMatrix validate_weight_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd raw(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw Error(ErrorCode::kNotSquare, "row " + std::to_string(i) + " has " +
                                             std::to_string(row.size()) +
                                             " entries, expected " +
                                             std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) raw(i, j) = row[static_cast<std::size_t>(j)];
  }
  return validate_weight_matrix(raw);
}

Eigen::VectorXd stationary_distribution(const WeightMatrix& w,
                                        StationaryMethod method) {
  const Eigen::MatrixXd& m = w.matrix();
  const Eigen::Index n = m.rows();
  if (method == StationaryMethod::kAuto) {
    method = w.size() <= kDirectSolveLimit ? StationaryMethod::kDirect
                                           : StationaryMethod::kPowerIteration;
  }

  if (method == StationaryMethod::kDirect) {
    // (W^T - I) v = 0 with the last equation replaced by sum(v) = 1.
    Eigen::MatrixXd a = m.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd v = a.fullPivLu().solve(b);
    return v / v.sum();
  }

  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd wt = m.transpose();
  for (std::size_t it = 0; it < kPowerIterationCap; ++it) {
    Eigen::VectorXd next = wt * v;
    next /= next.sum();
    const double residual = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (residual < kPowerResidual) return v;
  }
  throw Error(ErrorCode::kNoConvergence,
              "power iteration did not reach residual 1e-12");
}

SpectralSummary spectral_gap(const WeightMatrix& w) {
  SpectralSummary out;
  out.stationary = stationary_distribution(w);
  const std::size_t n = w.size();
  if (n > 1) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(w.matrix(), false);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::kEigenFailure, "eigenvalue decomposition failed");
    }
    const Eigen::VectorXcd values = solver.eigenvalues();
    Eigen::Index unit = 0;
    double closest = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      const double d = std::abs(values(k) - std::complex<double>(1.0, 0.0));
      if (d < closest) {
        closest = d;
        unit = k;
      }
    }
    double lambda = 0.0;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      if (k != unit) lambda = std::max(lambda, std::abs(values(k)));
    }
    out.lambda_max = lambda;
  }
  out.mixing_bound =
      4.0 * std::log(static_cast<double>(n)) / (1.0 - out.lambda_max);
  return out;
}

bool MixingReport::all_within() const {
  return std::all_of(within_bound.begin(), within_bound.end(),
                     [](bool b) { return b; });
}

MixingReport verify_mixing_bound(const WeightMatrix& w, std::size_t horizon) {
  const SpectralSummary spectral = spectral_gap(w);
  const Eigen::MatrixXd& m = w.matrix();
  const Eigen::Index n = m.rows();
  const Eigen::RowVectorXd v = spectral.stationary.transpose();

  MixingReport report;
  report.horizon = horizon;
  report.bound = spectral.mixing_bound;
  report.partial_sums.assign(static_cast<std::size_t>(n), 0.0);

  Eigen::MatrixXd power = m;
  for (std::size_t k = 1; k <= horizon; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      report.partial_sums[static_cast<std::size_t>(i)] +=
          (power.row(i) - v).cwiseAbs().sum();
    }
    power = power * m;
  }
  for (double s : report.partial_sums) {
    report.within_bound.push_back(s <= report.bound);
  }
  return report;
}

}  // namespace p2pfl
