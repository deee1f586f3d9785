#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nmbath/qrt.hpp"

namespace nmbath::qrt {

namespace {

using qops::Matrix;
using qops::Vector;

std::vector<Operator> basis_in_picture(const dynamics::CompiledModel& model,
                                       const ObservableBasis& basis, double t) {
  std::vector<Operator> out;
  out.reserve(basis.size());
  for (const auto& a : basis.operators()) out.push_back(model.observable_in_picture(a, t));
  return out;
}

Eigen::VectorXcd traces_of(const std::vector<Operator>& ops, const Operator& x) {
  Eigen::VectorXcd v(static_cast<Index>(ops.size()));
  for (std::size_t mu = 0; mu < ops.size(); ++mu)
    v(static_cast<Index>(mu)) = (ops[mu] * x).trace();
  return v;
}

void check_times(std::span<const double> times, const char* what) {
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

}  // namespace

ObservableBasis::ObservableBasis(std::vector<Operator> operators) : ops_(std::move(operators)) {
  if (ops_.empty()) throw BasisError("observable basis is empty");
  const Index d = ops_.front().rows();
  for (const auto& a : ops_)
    if (a.rows() != d || a.cols() != d) throw BasisError("observable basis: operators must be d x d with a common d");
  if (static_cast<Index>(ops_.size()) != d * d) {
    std::ostringstream os;
    os << "observable basis: need " << d * d << " operators for d = " << d << ", got " << ops_.size();
    throw BasisError(os.str());
  }
  Matrix cols(d * d, d * d);
  for (std::size_t mu = 0; mu < ops_.size(); ++mu) cols.col(static_cast<Index>(mu)) = qops::vectorize(ops_[mu]);
  const Matrix gram = cols.adjoint() * cols;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Matrix>(gram).singularValues();
  const double smin = sv(sv.size() - 1);
  gram_condition_ = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(gram_condition_ <= kMaxGramCondition)) {
    std::ostringstream os;
    os << "observable basis is not linearly independent: Gram condition " << gram_condition_;
    throw BasisError(os.str());
  }
}

Matrix ObservableBasis::trace_map() const {
  const Index n = static_cast<Index>(ops_.size());
  Matrix t(n, n);
  for (Index mu = 0; mu < n; ++mu)
    t.row(mu) = qops::vectorize(ops_[static_cast<std::size_t>(mu)].transpose()).transpose();
  return t;
}

ObservableBasis pauli_basis() {
  return ObservableBasis({qops::sigma_x(), qops::sigma_y(), qops::sigma_z(), qops::identity_operator(2)});
}

Eigen::VectorXcd traces(const ObservableBasis& basis, const Operator& x) {
  return traces_of(basis.operators(), x);
}

Eigen::MatrixXcd expectation_series(const ModelSpec& model, const Operator& rho0,
                                    const ObservableBasis& basis, std::span<const double> times) {
  const auto result = dynamics::evolve_ensemble(model, rho0, times);
  Eigen::MatrixXcd out(static_cast<Index>(times.size()), static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < times.size(); ++k)
    out.row(static_cast<Index>(k)) = traces(basis, result.states[k]).transpose();
  return out;
}

double CorrelationSurface::max_residual(std::size_t t_index) const {
  double worst = 0.0;
  for (const auto& r : residual.at(t_index)) worst = std::max(worst, r.cwiseAbs().maxCoeff());
  return worst;
}

CorrelationSurface qrt_residual(const ModelSpec& model, const Operator& rho0, const Operator& s,
                                const ObservableBasis& basis, std::span<const double> t_grid,
                                std::span<const double> tau_grid) {
  qops::validate_density_matrix(rho0);
  check_times(t_grid, "correlation times t");
  check_times(tau_grid, "correlation lags tau");
  const dynamics::CompiledModel compiled(model);
  const Index d = compiled.dim();
  if (s.rows() != d || s.cols() != d) throw qops::DimensionError("correlation operator S has the wrong dimension");
  if (basis.dim() != d) throw qops::DimensionError("observable basis has the wrong dimension");

  const std::size_t nt = t_grid.size();
  const std::size_t ntau = tau_grid.size();
  const Index n = d * d;
  const Vector v0 = qops::vectorize(rho0);

  // Ensemble sums, in the Schroedinger frame, of
  //   x(t)      = rho_R(t) S(t)
  //   y(t, tau) = e^{tau G_R} x_R(t)
  // and the averaged one-time propagator phi(tau) = <e^{tau G_R}>.
  std::vector<Vector> x_avg(nt, Vector::Zero(n));
  std::vector<std::vector<Vector>> y_avg(nt, std::vector<Vector>(ntau, Vector::Zero(n)));
  std::vector<Matrix> phi(ntau, Matrix::Zero(n, n));
  std::vector<Operator> s_t(nt);
  for (std::size_t i = 0; i < nt; ++i) s_t[i] = compiled.observable_in_picture(s, t_grid[i]);

  for (const auto& entry : model.ensemble.entries()) {
    const qops::Propagator prop(compiled.generator(entry.rate));
    std::vector<Matrix> lag(ntau);
    for (std::size_t j = 0; j < ntau; ++j) {
      lag[j] = prop.at(tau_grid[j]).matrix();
      phi[j] += entry.weight * lag[j];
    }
    for (std::size_t i = 0; i < nt; ++i) {
      const Operator rho_t = qops::devectorize(prop.at(t_grid[i]).matrix() * v0);
      const Vector x = qops::vectorize(rho_t * s_t[i]);
      x_avg[i] += entry.weight * x;
      for (std::size_t j = 0; j < ntau; ++j) y_avg[i][j] += entry.weight * (lag[j] * x);
    }
  }

  CorrelationSurface surf;
  surf.t_grid.assign(t_grid.begin(), t_grid.end());
  surf.tau_grid.assign(tau_grid.begin(), tau_grid.end());
  surf.actual.assign(nt, {});
  surf.predicted.assign(nt, {});
  surf.residual.assign(nt, {});
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < ntau; ++j) {
      const auto obs = basis_in_picture(compiled, basis, t_grid[i] + tau_grid[j]);
      const Eigen::VectorXcd actual = traces_of(obs, qops::devectorize(y_avg[i][j]));
      // With a complete basis, G_t(tau) actual(t, 0) = T_{t+tau} phi(tau) x_avg(t).
      const Eigen::VectorXcd predicted =
          tau_grid[j] == 0.0 ? actual : traces_of(obs, qops::devectorize(phi[j] * x_avg[i]));
      surf.actual[i].push_back(actual);
      surf.predicted[i].push_back(predicted);
      surf.residual[i].push_back(actual - predicted);
    }
  }
  return surf;
}

Eigen::VectorXcd two_time_correlation(const ModelSpec& model, const Operator& rho0,
                                      const Operator& s, const ObservableBasis& basis, double t,
                                      double tau) {
  const double ts[] = {t};
  const double taus[] = {tau};
  return qrt_residual(model, rho0, s, basis, ts, taus).actual[0][0];
}

std::vector<Eigen::VectorXcd> qrt_prediction(const ModelSpec& model, const Operator& rho0,
                                             const Operator& s, const ObservableBasis& basis,
                                             double t, std::span<const double> taus) {
  const double ts[] = {t};
  return qrt_residual(model, rho0, s, basis, ts, taus).predicted[0];
}

Operator stationary_state(const ModelSpec& model, const Operator& rho0) {
  qops::validate_density_matrix(rho0);
  const dynamics::CompiledModel compiled(model);
  const Vector v0 = qops::vectorize(rho0);
  Vector acc = Vector::Zero(v0.size());
  for (const auto& entry : model.ensemble.entries()) {
    // Projector onto the kernel along the range: V (W^dag V)^{-1} W^dag with
    // V, W the right and left null vectors. Needs only a semisimple zero
    // eigenvalue, so exceptional points elsewhere in the spectrum are fine.
    const Matrix g = compiled.generator(entry.rate).matrix();
    const Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = 1e-9 * std::max(1.0, sv(0));
    Index nullity = 0;
    while (nullity < sv.size() && sv(sv.size() - 1 - nullity) <= tol) ++nullity;
    if (nullity == 0) continue;
    const Matrix right = svd.matrixV().rightCols(nullity);
    const Matrix left = svd.matrixU().rightCols(nullity);
    const Matrix overlap = left.adjoint() * right;
    const Eigen::VectorXd osv = Eigen::JacobiSVD<Matrix>(overlap).singularValues();
    if (!(osv(osv.size() - 1) * qops::kSpectralConditionLimit > osv(0)))
      throw std::runtime_error("stationary_state: zero eigenvalue is not semisimple to working accuracy");
    acc += entry.weight * (right * overlap.partialPivLu().solve(left.adjoint() * v0));
  }
  return qops::devectorize(acc);
}

Eigen::VectorXcd inhomogeneity_amplitude(const ModelSpec& model, const Operator& rho0,
                                         const Operator& s, const ObservableBasis& basis) {
  const Operator diff = rho0 - stationary_state(model, rho0);
  return traces(basis, diff * s);
}

Operator dephasing_analytic(const ratebath::RateEnsemble& ens, const Operator& rho0, double t) {
  if (rho0.rows() != 2 || rho0.cols() != 2) throw qops::DimensionError("dephasing_analytic: 2-level system only");
  const double p0 = ratebath::survival(ens, t);
  const double g_plus = 0.5 * (1.0 + p0);
  const double g_minus = 0.5 * (1.0 - p0);
  const Operator z = qops::sigma_z();
  return g_plus * rho0 + g_minus * (z * rho0 * z);
}

double dephasing_h(const ratebath::RateEnsemble& ens, double t, double tau) {
  return ratebath::survival(ens, t + tau) - ratebath::survival(ens, t) * ratebath::survival(ens, tau);
}

Eigen::VectorXcd dephasing_residual(const ratebath::RateEnsemble& ens, const Operator& rho0,
                                    const Operator& s, double t, double tau) {
  if (rho0.rows() != 2 || s.rows() != 2) throw qops::DimensionError("dephasing_residual: 2-level system only");
  // rho0 - rho_inf is the coherent (off-diagonal) part of rho0.
  Operator coherent = rho0;
  coherent(0, 0) = 0.0;
  coherent(1, 1) = 0.0;
  Eigen::VectorXcd amp = traces(pauli_basis(), coherent * s);
  amp(2) = 0.0;
  amp(3) = 0.0;
  return amp * dephasing_h(ens, t, tau);
}

Superoperator heisenberg_generator(const Superoperator& gen) {
  const Index d = gen.dim();
  const Index n = d * d;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, Index> p(n);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) p.indices()(i + j * d) = j + i * d;
  return Superoperator(Matrix(p * gen.matrix().transpose() * p.transpose()));
}

Matrix expectation_generator_matrix(const Superoperator& gen, const ObservableBasis& basis) {
  if (basis.dim() != gen.dim()) throw qops::DimensionError("expectation_generator_matrix: dimension mismatch");
  const Matrix t = basis.trace_map();
  return (t * gen.matrix()) * t.fullPivLu().inverse();
}

}  // namespace nmbath::qrt
