#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "p2pfl/error.hpp"

namespace p2pfl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// 2 for bad input (graph, scenario, bound inputs), 3 for numerical or I/O
/// failures during a run.
int exit_code(ErrorCode code) noexcept;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::size_t workers = 1;
};

/// Each command takes the config text, writes results to `out` and
/// diagnostics to `err`, and returns the process exit code.
int cmd_run(std::string_view config, const RunOptions& options, std::ostream& out,
            std::ostream& err);
int cmd_bound(std::string_view config, std::ostream& out, std::ostream& err);
int cmd_check_graph(std::string_view config, std::ostream& out, std::ostream& err);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace p2pfl::cli
