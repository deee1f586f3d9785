#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "nmbath/cli/config.hpp"

namespace nmbath::cli {

enum class Command { kernel, evolve, correlate, cpcheck, fitpow };

std::optional<Command> parse_command(std::string_view name);
std::string to_string(Command cmd);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trajectories;
};

void apply_overrides(RunConfig& cfg, const Overrides& overrides);

/// Each command writes into cfg.output.dir and throws on failure.
void cmd_kernel(const RunConfig& cfg, std::ostream& log);
void cmd_evolve(const RunConfig& cfg, std::ostream& log);
void cmd_correlate(const RunConfig& cfg, std::ostream& log);
void cmd_cpcheck(const RunConfig& cfg, std::ostream& log);
void cmd_fitpow(const RunConfig& cfg, std::ostream& log);

/// Loads the config, applies overrides, writes the normalized config next to
/// the outputs and runs the command. Returns the process exit code:
/// 0 success, 2 config error, 3 solver error.
int run(Command cmd, const std::string& config_path, const Overrides& overrides, std::ostream& log);

}  // namespace nmbath::cli
