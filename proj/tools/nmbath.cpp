// nmbath <kernel|evolve|correlate|cpcheck|fitpow> --config <path> [--out <dir>]
//        [--seed <u64>] [--trajectories <n>]

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nmbath/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace nmbath::cli;

  CLI::App app{"Open-system dynamics under a distribution of dissipation rates"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t trajectories = 0;

  const char* names[] = {"kernel", "evolve", "correlate", "cpcheck", "fitpow"};
  const char* help[] = {
      "waiting-time, survival, sprinkling and kernel series with a summary",
      "evolve the reduced state with the selected solvers",
      "two-time correlators, regression prediction and residual",
      "complete-positivity check of the reconstructed maps",
      "power-law fit of the waiting-time density",
  };
  for (int k = 0; k < 5; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config, "config file")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Monte Carlo seed (overrides solver.seed)");
    sub->add_option("--trajectories", trajectories, "Monte Carlo trajectories (overrides solver.trajectories)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const auto* chosen = app.get_subcommands().front();
  Overrides overrides;
  if (chosen->count("--out") > 0) overrides.out_dir = out;
  if (chosen->count("--seed") > 0) overrides.seed = seed;
  if (chosen->count("--trajectories") > 0) overrides.trajectories = trajectories;
  return run(*parse_command(chosen->get_name()), config, overrides, std::cerr);
}
