#include "p2pfl/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "p2pfl/config.hpp"
#include "p2pfl/sim.hpp"
#include "p2pfl/theory.hpp"

namespace p2pfl::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Finite doubles as numbers, infinities as the string "inf".
json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  return file;
}

void close_output(std::ofstream& file, const std::filesystem::path& path) {
  file.flush();
  if (!file) throw IoError("failed writing " + path.string());
}

void write_discrete_csv(std::ostream& os, const ExperimentReport& report, std::size_t m) {
  os << "trial,round,node,estimate_index";
  for (std::size_t j = 0; j < m; ++j) os << ",belief_" << j;
  os << "\n";
  for (const auto& t : report.trials) {
    for (std::size_t k = 0; k < t.estimate_trajectory.size(); ++k) {
      for (std::size_t i = 0; i < t.n_nodes; ++i) {
        os << t.trial << ',' << k + 1 << ',' << i << ',' << t.estimate_trajectory[k][i];
        const Eigen::VectorXd& logs = t.log_belief_trajectory[k][i];
        for (Eigen::Index j = 0; j < logs.size(); ++j) os << ',' << fmt(std::exp(logs(j)));
        os << "\n";
      }
    }
  }
}

void write_gaussian_csv(std::ostream& os, const std::vector<TrialResult>& trials, std::size_t d) {
  os << "trial,round,node";
  for (std::size_t j = 0; j < d; ++j) os << ",mu_" << j;
  for (std::size_t j = 0; j < d; ++j) os << ",sigma_" << j;
  os << ",mse\n";
  for (const auto& t : trials) {
    for (std::size_t k = 0; k < t.mean_trajectory.size(); ++k) {
      for (std::size_t i = 0; i < t.n_nodes; ++i) {
        os << t.trial << ',' << k + 1 << ',' << i;
        for (Eigen::Index j = 0; j < t.mean_trajectory[k][i].size(); ++j) {
          os << ',' << fmt(t.mean_trajectory[k][i](j));
        }
        for (Eigen::Index j = 0; j < t.sigma_diag_trajectory[k][i].size(); ++j) {
          os << ',' << fmt(t.sigma_diag_trajectory[k][i](j));
        }
        os << ',';
        if (!t.mse.empty()) os << fmt(t.mse[k][i]);
        os << "\n";
      }
    }
  }
}

json discrete_rows(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& t : report.trials) {
    for (std::size_t k = 0; k < t.estimate_trajectory.size(); ++k) {
      for (std::size_t i = 0; i < t.n_nodes; ++i) {
        const Eigen::VectorXd p = t.log_belief_trajectory[k][i].array().exp();
        rows.push_back({{"trial", t.trial},
                        {"round", k + 1},
                        {"node", i},
                        {"estimate_index", t.estimate_trajectory[k][i]},
                        {"belief", vector_json(p)}});
      }
    }
  }
  return rows;
}

json gaussian_rows(const std::vector<TrialResult>& trials) {
  json rows = json::array();
  for (const auto& t : trials) {
    for (std::size_t k = 0; k < t.mean_trajectory.size(); ++k) {
      for (std::size_t i = 0; i < t.n_nodes; ++i) {
        json row{{"trial", t.trial},
                 {"round", k + 1},
                 {"node", i},
                 {"mu", vector_json(t.mean_trajectory[k][i])},
                 {"sigma", vector_json(t.sigma_diag_trajectory[k][i])}};
        row["mse"] = t.mse.empty() ? json(nullptr) : json(t.mse[k][i]);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

ordered_json summary_json(const Scenario& s, const ExperimentReport& report, double seconds) {
  ordered_json j;
  j["engine"] = s.engine == Engine::kDiscrete ? "discrete" : "gaussian";
  j["n_nodes"] = s.graph.size();
  j["rounds"] = s.n_rounds;
  j["trials"] = s.trials;
  j["seed"] = s.master_seed;
  j["cooperation"] = s.cooperate;
  j["lambda_max"] = report.analysis.spectral.lambda_max;
  j["empirical_error"] = report.empirical_error ? json(*report.empirical_error) : json(nullptr);
  j["theorem_rounds"] =
      report.analysis.theorem_rounds ? json(*report.analysis.theorem_rounds) : json(nullptr);
  j["first_all_success_round"] =
      report.first_all_success_round ? json(*report.first_all_success_round) : json(nullptr);
  if (report.analysis.separation) {
    j["theta_star"] = report.analysis.separation->theta_star;
    j["k_theta"] = number_json(report.analysis.separation->k_theta);
  }
  if (!report.mean_mse.empty()) j["final_mse"] = report.mean_mse.back();
  if (!report.mean_baseline_mse.empty()) {
    j["final_baseline_mse"] = report.mean_baseline_mse.back();
  }
  std::size_t clamps = 0;
  for (const auto& t : report.trials) clamps += t.clamp_events;
  j["clamp_events"] = clamps;
  j["runtime_seconds"] = seconds;
  return j;
}

// K(Theta) and C from the models unless overridden.
struct ResolvedBound {
  BoundInputs inputs;
  bool assumption_violated = false;
};

ResolvedBound resolve_bound(const ConfigDocument& doc) {
  const Scenario& s = doc.scenario;
  const BoundOverrides& o = doc.bound;
  ResolvedBound r;
  BoundInputs& in = r.inputs;
  in.delta = s.delta;
  in.n_nodes = o.n_nodes.value_or(s.graph.size());
  if (o.n_params) {
    in.n_params = *o.n_params;
  } else if (s.theta_set) {
    in.n_params = s.theta_set->size();
  } else {
    throw ConfigError(ConfigError::Kind::kValidation, "scenario.parameters",
                      "needed when scenario.bound.n_params is absent");
  }
  in.lambda_max = o.lambda_max ? *o.lambda_max : spectral_gap(s.graph).lambda_max;

  const bool need_models = !o.k_theta || !o.log_ratio_bound;
  if (need_models && (!doc.has_nodes() || !s.theta_set)) {
    throw ConfigError(ConfigError::Kind::kValidation, "scenario.bound",
                      "C and k_theta need either explicit values or nodes and parameters");
  }
  if (o.k_theta) {
    in.k_theta = *o.k_theta;
  } else {
    const SpectralSummary spectral = spectral_gap(s.graph);
    in.k_theta =
        separation_table(s.models, *s.theta_set, spectral.stationary, s.mc_samples, s.master_seed)
            .k_theta;
  }

  bool unbounded = false;
  double c = 0.0;
  if (doc.has_nodes() && s.theta_set) {
    for (const auto& model : s.models) {
      const auto b = model->bounds(*s.theta_set);
      if (!b) {
        unbounded = true;
        break;
      }
      c = std::max(c, b->log_ratio_bound());
    }
  }
  if (o.log_ratio_bound) {
    in.log_ratio_bound = *o.log_ratio_bound;
    r.assumption_violated = unbounded;
  } else if (unbounded) {
    throw Error(ErrorCode::kUnboundedKL,
                "likelihood ratios are unbounded for these models; set scenario.bound.C");
  } else {
    in.log_ratio_bound = c;
  }
  return r;
}

}  // namespace

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNoConvergence:
    case ErrorCode::kEigenFailure:
    case ErrorCode::kSingularPrecision:
    case ErrorCode::kZeroLikelihoodAllTheta:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>());
}

int cmd_run(std::string_view config, const RunOptions& options, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    ConfigDocument doc = parse_config(config);
    if (options.seed) doc.scenario.master_seed = *options.seed;
    if (options.trials) {
      if (*options.trials == 0) {
        throw ConfigError(ConfigError::Kind::kValidation, "--trials", "must be >= 1");
      }
      doc.scenario.trials = *options.trials;
    }
    if (options.out_dir) doc.output.dir = *options.out_dir;
    if (options.format) {
      if (*options.format != "csv" && *options.format != "json") {
        throw ConfigError(ConfigError::Kind::kValidation, "--format", "expected csv or json");
      }
      doc.output.format = *options.format;
    }
    Scenario s = runnable_scenario(doc);
    s.record_trajectory = true;

    const auto start = std::chrono::steady_clock::now();
    const ExperimentReport report = run_experiment(s, options.workers);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::filesystem::path dir(doc.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    const bool discrete = s.engine == Engine::kDiscrete;
    const std::size_t d = discrete ? s.theta_set->size() : s.gaussian_prior->dimension();
    if (doc.output.format == "csv") {
      const auto path = dir / "metrics.csv";
      auto file = open_output(path);
      if (discrete) {
        write_discrete_csv(file, report, d);
      } else {
        write_gaussian_csv(file, report.trials, d);
      }
      close_output(file, path);
      if (!report.baselines.empty()) {
        const auto bpath = dir / "baseline.csv";
        auto bfile = open_output(bpath);
        write_gaussian_csv(bfile, report.baselines, d);
        close_output(bfile, bpath);
      }
    } else {
      json metrics;
      metrics["metrics"] = discrete ? discrete_rows(report) : gaussian_rows(report.trials);
      if (!report.baselines.empty()) metrics["baseline"] = gaussian_rows(report.baselines);
      const auto path = dir / "metrics.json";
      auto file = open_output(path);
      file << metrics.dump() << "\n";
      close_output(file, path);
    }

    const auto spath = dir / "summary.json";
    auto sfile = open_output(spath);
    sfile << summary_json(s, report, seconds).dump(2) << "\n";
    close_output(sfile, spath);
    out << spath.string() << "\n";
    return kExitOk;
  });
}

int cmd_bound(std::string_view config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ConfigDocument doc = parse_config(config);
    ResolvedBound r;
    try {
      r = resolve_bound(doc);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotGloballyLearnable) {
        throw e.with_context("global learnability assumption fails (Theta* is empty)");
      }
      throw;
    }
    validate(r.inputs);
    ordered_json j;
    j["n_nodes"] = r.inputs.n_nodes;
    j["n_params"] = r.inputs.n_params;
    j["delta"] = r.inputs.delta;
    j["C"] = r.inputs.log_ratio_bound;
    j["k_theta"] = number_json(r.inputs.k_theta);
    j["lambda_max"] = r.inputs.lambda_max;
    j["n"] = sample_complexity(r.inputs);
    j["assumption_violated"] = r.assumption_violated;
    out << j.dump() << "\n";
    return kExitOk;
  });
}

int cmd_check_graph(std::string_view config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ConfigDocument doc = parse_config(config);
    const SpectralSummary spectral = spectral_gap(doc.scenario.graph);
    const MixingReport mixing = verify_mixing_bound(doc.scenario.graph, doc.horizon);
    ordered_json j;
    j["valid"] = true;
    j["n_nodes"] = doc.scenario.graph.size();
    j["stationary"] = vector_json(spectral.stationary);
    j["lambda_max"] = spectral.lambda_max;
    j["mixing_bound"] = spectral.mixing_bound;
    j["horizon"] = mixing.horizon;
    j["partial_sums"] = mixing.partial_sums;
    j["within_bound"] = mixing.all_within();
    out << j.dump() << "\n";
    return kExitOk;
  });
}

}  // namespace p2pfl::cli
