#pragma once

// One- and two-time expectation values over a rate ensemble, the
// regression-theorem prediction built from the averaged one-time propagator,
// and the residual I(t, tau) between the two.
//
// Two-time correlators are <S(t) A(t+tau)> = <Tr{A e^{tau G_R}[rho_R(t) S]}>,
// with operators taken in the model's picture.

#include <span>
#include <stdexcept>
#include <vector>

#include "nmbath/dynamics.hpp"

namespace nmbath::qrt {

using qops::Complex;
using qops::Index;
using qops::Operator;
using qops::Superoperator;
using dynamics::ModelSpec;

class BasisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kMaxGramCondition = 1e6;

/// Complete operator basis {A_mu}: d^2 linearly independent d x d matrices.
class ObservableBasis {
 public:
  explicit ObservableBasis(std::vector<Operator> operators);

  const std::vector<Operator>& operators() const noexcept { return ops_; }
  std::size_t size() const noexcept { return ops_.size(); }
  Index dim() const noexcept { return ops_.front().rows(); }
  /// Condition number of the Hilbert-Schmidt Gram matrix.
  double gram_condition() const noexcept { return gram_condition_; }

  /// Row mu is vec(A_mu^T)^T, so (T vec X)_mu = Tr{A_mu X}.
  qops::Matrix trace_map() const;

 private:
  std::vector<Operator> ops_;
  double gram_condition_ = 0.0;
};

/// {sigma_x, sigma_y, sigma_z, I}.
ObservableBasis pauli_basis();

/// Tr{A_mu X} for every basis element.
Eigen::VectorXcd traces(const ObservableBasis& basis, const Operator& x);

/// Row k holds Tr{A_mu rho_S(t_k)} with states from the exact ensemble solver.
Eigen::MatrixXcd expectation_series(const ModelSpec& model, const Operator& rho0,
                                    const ObservableBasis& basis, std::span<const double> times);

/// <S(t) A_mu(t+tau)> for each basis element.
Eigen::VectorXcd two_time_correlation(const ModelSpec& model, const Operator& rho0,
                                      const Operator& s, const ObservableBasis& basis, double t,
                                      double tau);

/// Regression prediction G_t(tau) actual(t, 0), where G_t(tau) carries the
/// equal-time values forward with the ensemble-averaged propagator from 0 to
/// tau. Exact at tau = 0.
std::vector<Eigen::VectorXcd> qrt_prediction(const ModelSpec& model, const Operator& rho0,
                                             const Operator& s, const ObservableBasis& basis,
                                             double t, std::span<const double> taus);

/// Values indexed [t index][tau index], each a vector over the basis.
struct CorrelationSurface {
  std::vector<double> t_grid;
  std::vector<double> tau_grid;
  std::vector<std::vector<Eigen::VectorXcd>> actual;
  std::vector<std::vector<Eigen::VectorXcd>> predicted;
  std::vector<std::vector<Eigen::VectorXcd>> residual;

  /// max over tau and basis of |residual(t_i, tau)|.
  double max_residual(std::size_t t_index) const;
};

CorrelationSurface qrt_residual(const ModelSpec& model, const Operator& rho0, const Operator& s,
                                const ObservableBasis& basis, std::span<const double> t_grid,
                                std::span<const double> tau_grid);

/// Long-time state sum_R P_R Pi_R rho0, Pi_R the zero-eigenvalue projector
/// of L_H + gamma_R L. Resolves degenerate null spaces through rho0.
/// Schroedinger picture.
Operator stationary_state(const ModelSpec& model, const Operator& rho0);

/// Tr{A_mu [rho0 - rho_inf] S}.
Eigen::VectorXcd inhomogeneity_amplitude(const ModelSpec& model, const Operator& rho0,
                                         const Operator& s, const ObservableBasis& basis);

/// g+ rho0 + g- sigma_z rho0 sigma_z with g+- = (1 +- P0(t)) / 2 (interaction
/// picture dephasing).
Operator dephasing_analytic(const ratebath::RateEnsemble& ens, const Operator& rho0, double t);

/// h(t, tau) = P0(t + tau) - P0(t) P0(tau).
double dephasing_h(const ratebath::RateEnsemble& ens, double t, double tau);

/// Closed-form dephasing residual in the Pauli basis:
/// diag(1,1,0,0) Tr{A_mu [rho0 - rho_inf] S} h(t, tau).
Eigen::VectorXcd dephasing_residual(const ratebath::RateEnsemble& ens, const Operator& rho0,
                                    const Operator& s, double t, double tau);

/// Heisenberg-picture generator G^dag with Tr{G^dag[A] X} = Tr{A G[X]}.
Superoperator heisenberg_generator(const Superoperator& gen);

/// M with Tr{A_mu G[X]} = sum_nu M_{mu nu} Tr{A_nu X} for all X.
qops::Matrix expectation_generator_matrix(const Superoperator& gen, const ObservableBasis& basis);

}  // namespace nmbath::qrt
