#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "p2pfl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized federated learning simulator"};
  app.require_subcommand(1);

  p2pfl::cli::RunOptions options;
  std::string run_config, bound_config, graph_config;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::string out_dir, format;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write metrics");
  run->add_option("config", run_config, "Scenario config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the master seed");
  auto* trials_opt = run->add_option("--trials", trials, "Override the number of trials");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* format_opt =
      run->add_option("--format", format, "Metrics format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--workers", options.workers, "Worker threads for trials")
      ->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound", "Print the sample-complexity bound");
  bound->add_option("config", bound_config, "Scenario config (JSON)")->required();

  auto* check = app.add_subcommand("check-graph", "Validate the weight matrix and report mixing");
  check->add_option("config", graph_config, "Scenario config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return p2pfl::cli::kExitValidation;
  }

  auto load = [](const std::string& path) -> std::optional<std::string> {
    try {
      return p2pfl::cli::read_file(path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return std::nullopt;
    }
  };

  if (*run) {
    if (*seed_opt) options.seed = seed;
    if (*trials_opt) options.trials = trials;
    if (*out_opt) options.out_dir = out_dir;
    if (*format_opt) options.format = format;
    const auto text = load(run_config);
    if (!text) return p2pfl::cli::kExitRuntime;
    return p2pfl::cli::cmd_run(*text, options, std::cout, std::cerr);
  }
  if (*bound) {
    const auto text = load(bound_config);
    if (!text) return p2pfl::cli::kExitRuntime;
    return p2pfl::cli::cmd_bound(*text, std::cout, std::cerr);
  }
  const auto text = load(graph_config);
  if (!text) return p2pfl::cli::kExitRuntime;
  return p2pfl::cli::cmd_check_graph(*text, std::cout, std::cerr);
}
