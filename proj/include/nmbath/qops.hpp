#pragma once

// Dense operator and superoperator algebra for small open quantum systems.
//
// Vectorization convention (used by every superoperator in this library):
// column-major stacking, vec(M)[i + j*d] = M(i, j). Under this convention
// vec(A X B) = (B^T (x) A) vec(X).

#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nmbath::qops {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// d x d operator on the system Hilbert space (Hamiltonians, states, jumps,
/// observables). Units are hbar = 1.
using Operator = Matrix;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotHermitianError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Jump operators violate sum_a V_a^dag V_a = I.
class NormalizationError : public std::invalid_argument {
 public:
  NormalizationError(const std::string& what, double deviation)
      : std::invalid_argument(what), deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

 private:
  double deviation_;
};

class SingularResolventError : public std::runtime_error {
 public:
  SingularResolventError(const std::string& what, Complex u)
      : std::runtime_error(what), u_(u) {}
  Complex u() const noexcept { return u_; }

 private:
  Complex u_;
};

class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear map on vectorized d x d operators, stored as a d^2 x d^2 matrix.
class Superoperator {
 public:
  Superoperator() = default;
  explicit Superoperator(Matrix m);

  static Superoperator identity(Index dim);
  static Superoperator zero(Index dim);

  Index dim() const noexcept { return dim_; }
  const Matrix& matrix() const noexcept { return m_; }

  Operator apply(const Operator& op) const;

  Superoperator operator*(const Superoperator& rhs) const;
  Superoperator operator+(const Superoperator& rhs) const;
  Superoperator operator-(const Superoperator& rhs) const;
  friend Superoperator operator*(Complex s, const Superoperator& op);
  friend Superoperator operator*(double s, const Superoperator& op);

 private:
  Index dim_ = 0;
  Matrix m_;
};

Vector vectorize(const Operator& op);
Operator devectorize(const Vector& v);

// Standard operators (d = 2, |0> is the sigma_z = +1 state).
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
/// |1><0| in the sigma_z eigenbasis.
Operator sigma_minus();
Operator identity_operator(Index dim);

double hermiticity_defect(const Operator& op);
bool is_hermitian(const Operator& op, double tol = 1e-12);
/// Smallest eigenvalue of the Hermitian part of op.
double min_eigenvalue(const Operator& op);

/// Throws NotHermitianError / DimensionError unless op is a unit-trace PSD
/// Hermitian matrix (trace within 1e-12, eigenvalues >= -1e-10).
void validate_density_matrix(const Operator& op);

/// Generator of L_H[rho] = -i [H, rho].
Superoperator hamiltonian_liouvillian(const Operator& h);

/// L[rho] = 1/2 sum_a ([V_a, rho V_a^dag] + [V_a rho, V_a^dag]).
/// An empty jump list yields the zero superoperator of dimension `dim`.
Superoperator lindblad_dissipator(std::span<const Operator> jumps, Index dim);

/// || sum_a V_a^dag V_a - I || (max absolute entry).
double jump_normalization_defect(std::span<const Operator> jumps);

/// E[rho] = sum_a V_a rho V_a^dag. Requires sum_a V_a^dag V_a = I within
/// 1e-10, so that L = E - I.
Superoperator jump_superoperator(std::span<const Operator> jumps);

/// exp(t * gen), evaluated for many times from one factorization.
///
/// Uses the eigendecomposition when the eigenvector matrix has condition
/// number <= 1e8, otherwise Pade scaling-and-squaring on every call.
class Propagator {
 public:
  explicit Propagator(const Superoperator& gen);

  Superoperator at(double t) const;
  bool spectral() const noexcept { return spectral_; }
  const Superoperator& generator() const noexcept { return gen_; }

 private:
  Superoperator gen_;
  bool spectral_ = false;
  Matrix vecs_;
  Matrix vecs_inv_;
  Vector vals_;
};

inline constexpr double kSpectralConditionLimit = 1e8;

Superoperator propagate(const Superoperator& gen, double t);

/// (u - gen)^{-1}; throws SingularResolventError when u is on the spectrum.
Superoperator resolvent(const Superoperator& gen, Complex u);

/// Choi matrix sum_ij E_ij (x) map(E_ij), with E_ij the matrix units.
Matrix choi_matrix(const Superoperator& map);
/// Eigenvalues (ascending) of the Hermitian part of the Choi matrix.
Eigen::VectorXd choi_spectrum(const Superoperator& map);
double choi_min_eigenvalue(const Superoperator& map);

inline constexpr double kChoiTolerance = 1e-10;

}  // namespace nmbath::qops
