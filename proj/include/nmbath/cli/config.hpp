#pragma once

// Run configuration: flat `section.key = value` text, one assignment per
// line, `#` starts a comment. See docs/formats.md for the full key list.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmbath/dynamics.hpp"
#include "nmbath/fractional.hpp"
#include "nmbath/powerlaw.hpp"
#include "nmbath/ratebath.hpp"

namespace nmbath::cli {

using qops::Operator;

/// Bad config text or values. line() is 0 when the problem is not tied to a
/// single line (missing key, inconsistent combination).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, std::string field)
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

struct ModelConfig {
  std::string preset = "dephasing";  // dephasing | custom
  double omega = 1.0;
  Operator hamiltonian;              // custom only
  std::vector<Operator> jumps;       // custom only
  std::string picture = "interaction";
};

struct EnsembleConfig {
  std::string type = "two_state";  // single | custom | two_state | manifold | fractional
  double rate = 1.0;
  std::vector<double> rates;
  std::vector<double> weights;
  double p_up = 0.5;
  double gamma_up = 2.0;
  double gamma_down = 1.0;
  double gamma = 1.0;
  double a = 0.25;
  double b = 0.5;
  int n = 400;
  double alpha = 0.5;
  double mean_rate = 1.0;
  double beta = 1.0;
  double mean_waiting_time = std::numeric_limits<double>::infinity();
};

/// t_max or tau_max = 0 selects 20 / <gamma>.
struct GridConfig {
  double t_max = 0.0;
  int steps = 1999;
  double tau_max = 0.0;
  int tau_steps = 20;
};

struct SolverConfig {
  std::vector<std::string> list{"ensemble", "volterra"};
  std::size_t trajectories = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double max_step = 0.01;
};

struct CorrelateConfig {
  std::string observable = "identity";  // identity | sigma_x | sigma_y | sigma_z | sigma_minus | sigma_plus | custom
  Operator matrix;                      // custom only
};

struct FitpowConfig {
  double t_lo = 0.0;  // 0 selects the default window
  double t_hi = 0.0;
  int points = 200;
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"csv", "json"};
};

struct InitialConfig {
  std::string state = "plus";  // plus | minus | up | down | mixed | custom
  Operator matrix;             // custom only
};

struct RunConfig {
  ModelConfig model;
  EnsembleConfig ensemble;
  InitialConfig initial;
  GridConfig grid;
  SolverConfig solver;
  CorrelateConfig correlate;
  FitpowConfig fitpow;
  OutputConfig output;

  bool writes(const std::string& format) const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Parses config text; `source` names the input in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::string& path);

/// Canonical text with every relevant key spelled out; parsing it yields a
/// RunConfig equal to the one it came from.
std::string normalized_config(const RunConfig& cfg);

/// Discrete ensemble; throws ConfigError for the fractional type.
ratebath::RateEnsemble build_ensemble(const RunConfig& cfg);
ratebath::FractionalKernelModel build_fractional(const RunConfig& cfg);
dynamics::ModelSpec build_model(const RunConfig& cfg);
Operator build_initial_state(const RunConfig& cfg, qops::Index dim);
Operator build_observable(const RunConfig& cfg, qops::Index dim);

}  // namespace nmbath::cli
