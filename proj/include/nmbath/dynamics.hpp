#pragma once

// Solvers for the reduced state rho_S(t) of a system whose Lindblad
// dissipation rate is drawn from a RateEnsemble:
//
//  * evolve_ensemble   rho_S(t) = sum_R P_R exp[(L_H + gamma_R L) t] rho0 (exact)
//  * evolve_volterra   effective memory-kernel equation
//                      drho/dt = L_H rho + int_0^t K(t-s) e^{(t-s)L_H} L rho(s) ds
//  * mc_trajectories   frozen-rate and renewal unravelings with jump map E

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmbath/qops.hpp"
#include "nmbath/ratebath.hpp"

namespace nmbath::dynamics {

using qops::Complex;
using qops::Index;
using qops::Operator;
using qops::Superoperator;

enum class Picture { schroedinger, interaction };

struct ModelSpec {
  Operator hamiltonian;
  std::vector<Operator> jumps;
  ratebath::RateEnsemble ensemble;
  Picture picture = Picture::interaction;
};

/// {sigma_z, I} / sqrt(2): L[rho] = (sigma_z rho sigma_z - rho) / 2, so each
/// coherence decays at the bare rate gamma_R and E is the full dephasing map.
std::vector<Operator> dephasing_jumps();

/// H_S = (omega/2) sigma_z with dephasing_jumps().
ModelSpec dephasing_model(double omega, ratebath::RateEnsemble ensemble,
                          Picture picture = Picture::interaction);

/// Superoperator pieces of a ModelSpec, built once.
class CompiledModel {
 public:
  explicit CompiledModel(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  Index dim() const noexcept { return spec_.hamiltonian.rows(); }
  const Superoperator& hamiltonian_part() const noexcept { return lh_; }
  const Superoperator& dissipator() const noexcept { return diss_; }
  /// L_H + rate * L.
  Superoperator generator(double rate) const;
  /// ||[L_H, L]||, zero when the free motion commutes with the dissipator.
  double commutator_norm() const;

  /// Free unitary exp(-i H t).
  Operator free_unitary(double t) const;
  /// Converts a Schroedinger-picture operator to the model's picture:
  /// rho_I(t) = e^{iHt} rho e^{-iHt} in the interaction picture.
  Operator to_picture(const Operator& op, double t) const;
  /// Observable in the model's picture, e^{t L_H}[A] = e^{-iHt} A e^{iHt}
  /// in the interaction picture, A otherwise.
  Operator observable_in_picture(const Operator& a, double t) const;

 private:
  ModelSpec spec_;
  Superoperator lh_;
  Superoperator diss_;
  Eigen::VectorXd energies_;
  Operator eigvecs_;
};

std::vector<double> uniform_grid(double t_max, std::size_t points);
bool is_uniform(std::span<const double> times, double rel_tol = 1e-9);

struct EvolutionResult {
  std::vector<double> times;
  std::vector<Operator> states;
  std::string solver;
  std::vector<double> trace_drift;
  std::vector<double> min_eigenvalue;

  // Monte Carlo: standard error of the mean of each entry's real/imag part.
  std::vector<Eigen::MatrixXd> stderr_re;
  std::vector<Eigen::MatrixXd> stderr_im;
  std::size_t trajectories = 0;

  // Volterra: max entry difference between step h and h/2.
  std::optional<double> step_error_estimate;
};

/// Fills trace_drift and min_eigenvalue from states.
void compute_diagnostics(EvolutionResult& result);

EvolutionResult evolve_ensemble(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times);

/// Exact ensemble evolution of an arbitrary operator, in the model's picture.
std::vector<Operator> ensemble_series(const CompiledModel& model, const Operator& op0,
                                      std::span<const double> times);

/// sum_R P_R exp[(L_H + gamma_R L) t], expressed in the model's picture.
Superoperator ensemble_map(const CompiledModel& model, double t);

class StepSizeError : public std::runtime_error {
 public:
  StepSizeError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

struct VolterraOptions {
  /// Internal step h <= max_step / <gamma>; grid intervals are subdivided.
  double max_step = 0.01;
  double richardson_tolerance = 1e-4;
  /// Return (4 rho_{h/2} - rho_h)/3 instead of rho_{h/2}.
  bool extrapolate = true;
};

/// Integrates the effective memory-kernel equation on a uniform grid.
///
/// The delta part k0 of the kernel enters as the Markovian term k0 L. Each
/// exponential mode (c_j, p_j) carries an auxiliary memory
///   m_j(t) = int_0^t c_j e^{p_j (t-s)} e^{(t-s) L_H} L rho(s) ds,
/// advanced by an exact one-step exponential recursion with trapezoidal
/// quadrature of L rho; the state itself takes a predictor-corrector step.
/// The run is repeated at h/2 and StepSizeError is thrown when the two
/// differ by more than richardson_tolerance.
EvolutionResult evolve_volterra(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times,
                                const ratebath::KernelDecomposition& kernel,
                                const VolterraOptions& options = {});

std::vector<Operator> volterra_series(const CompiledModel& model, const Operator& op0,
                                      std::span<const double> times,
                                      const ratebath::KernelDecomposition& kernel,
                                      const VolterraOptions& options = {},
                                      double* step_error_estimate = nullptr);

/// L(u) = <G_R(u)>^{-1} <G_R(u) gamma_R L>, G_R(u) = (u - L_H - gamma_R L)^{-1}.
Superoperator exact_memory_superop(const ModelSpec& model, Complex u);

/// K(u - L_H) L with K(z) = 1/P0(z) - z evaluated as a matrix function.
Superoperator effective_memory_superop(const ModelSpec& model, Complex u);

enum class MCScheme { frozen_rate, renewal };

struct MCConfig {
  std::size_t trajectories = 10000;
  std::uint64_t seed = 1;
  MCScheme scheme = MCScheme::frozen_rate;
  /// 0: hardware concurrency, capped by NMBATH_THREADS when set.
  unsigned threads = 0;
};

std::string to_string(MCScheme scheme);

/// Monte Carlo unraveling with jump map E between free evolutions e^{t L_H}.
///
/// frozen_rate draws one rate per trajectory and Poisson event times;
/// renewal draws every waiting time i.i.d. from w(t). Requires
/// sum_a V_a^dag V_a = I. Results do not depend on the thread count.
EvolutionResult mc_trajectories(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times, const MCConfig& config);

/// Maps at each grid time, reconstructed by evolving the d^2 matrix units.
std::vector<Superoperator> reconstruct_maps(
    Index dim, std::size_t n_times,
    const std::function<std::vector<Operator>(const Operator&)>& evolve);

/// Non-locality witness: fits the best constant generator X to
/// drho/dt - L_H rho over the run (central differences on a uniform grid)
/// and returns max_t || drho/dt - (L_H + X) rho ||. Expects Schroedinger
/// picture states.
double local_generator_residual(std::span<const double> times, std::span<const Operator> states,
                                const Superoperator& lh);

}  // namespace nmbath::dynamics
