#include <cmath>
#include <sstream>

#include "nmbath/dynamics.hpp"

namespace nmbath::dynamics {

std::vector<Operator> dephasing_jumps() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s * qops::sigma_z(), s * qops::identity_operator(2)};
}

ModelSpec dephasing_model(double omega, ratebath::RateEnsemble ensemble, Picture picture) {
  return {0.5 * omega * qops::sigma_z(), dephasing_jumps(), std::move(ensemble), picture};
}

CompiledModel::CompiledModel(ModelSpec spec)
    : spec_(std::move(spec)),
      lh_(qops::hamiltonian_liouvillian(spec_.hamiltonian)),
      diss_(qops::lindblad_dissipator(spec_.jumps, spec_.hamiltonian.rows())) {
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (spec_.hamiltonian + spec_.hamiltonian.adjoint()));
  energies_ = es.eigenvalues();
  eigvecs_ = es.eigenvectors();
}

Superoperator CompiledModel::generator(double rate) const { return lh_ + rate * diss_; }

double CompiledModel::commutator_norm() const {
  const auto& a = lh_.matrix();
  const auto& b = diss_.matrix();
  return (a * b - b * a).cwiseAbs().maxCoeff();
}

Operator CompiledModel::free_unitary(double t) const {
  const Eigen::VectorXcd phases =
      (Complex(0.0, -t) * energies_.cast<Complex>()).array().exp().matrix();
  return eigvecs_ * phases.asDiagonal() * eigvecs_.adjoint();
}

Operator CompiledModel::to_picture(const Operator& op, double t) const {
  if (spec_.picture == Picture::schroedinger || t == 0.0) return op;
  const Operator u = free_unitary(t);
  return u.adjoint() * op * u;
}

Operator CompiledModel::observable_in_picture(const Operator& a, double t) const {
  if (spec_.picture == Picture::schroedinger || t == 0.0) return a;
  const Operator u = free_unitary(t);
  return u * a * u.adjoint();
}

std::vector<double> uniform_grid(double t_max, std::size_t points) {
  if (points < 2) throw std::invalid_argument("time grid needs at least two points");
  if (!(t_max > 0.0)) throw std::invalid_argument("time grid needs t_max > 0");
  std::vector<double> t(points);
  const double h = t_max / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) t[k] = h * static_cast<double>(k);
  t.back() = t_max;
  return t;
}

bool is_uniform(std::span<const double> times, double rel_tol) {
  if (times.size() < 2) return true;
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k)
    if (std::abs((times[k] - times[k - 1]) - h) > rel_tol * std::abs(h)) return false;
  return true;
}

void compute_diagnostics(EvolutionResult& result) {
  result.trace_drift.clear();
  result.min_eigenvalue.clear();
  for (const auto& rho : result.states) {
    result.trace_drift.push_back(std::abs(rho.trace() - 1.0));
    result.min_eigenvalue.push_back(qops::min_eigenvalue(rho));
  }
}

std::vector<Superoperator> reconstruct_maps(
    Index dim, std::size_t n_times,
    const std::function<std::vector<Operator>(const Operator&)>& evolve) {
  std::vector<qops::Matrix> maps(n_times, qops::Matrix::Zero(dim * dim, dim * dim));
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      Operator unit = Operator::Zero(dim, dim);
      unit(i, j) = 1.0;
      const auto series = evolve(unit);
      if (series.size() != n_times) throw std::logic_error("reconstruct_maps: series length mismatch");
      for (std::size_t k = 0; k < n_times; ++k) maps[k].col(i + j * dim) = qops::vectorize(series[k]);
    }
  }
  std::vector<Superoperator> out;
  out.reserve(n_times);
  for (auto& m : maps) out.emplace_back(std::move(m));
  return out;
}

double local_generator_residual(std::span<const double> times, std::span<const Operator> states,
                                const Superoperator& lh) {
  if (times.size() != states.size() || times.size() < 5)
    throw std::invalid_argument("local_generator_residual: need >= 5 matching samples");
  const Index n = lh.matrix().rows();
  const auto k = static_cast<Index>(times.size() - 2);
  qops::Matrix lhs(n, k);
  qops::Matrix rhs(n, k);
  for (Index i = 0; i < k; ++i) {
    const auto c = static_cast<std::size_t>(i + 1);
    const double h = times[c + 1] - times[c - 1];
    const qops::Vector deriv = (qops::vectorize(states[c + 1]) - qops::vectorize(states[c - 1])) / h;
    const qops::Vector rho = qops::vectorize(states[c]);
    lhs.col(i) = rho;
    rhs.col(i) = deriv - lh.matrix() * rho;
  }
  // Least squares X lhs = rhs, i.e. lhs^T X^T = rhs^T.
  const qops::Matrix xt = lhs.transpose().completeOrthogonalDecomposition().solve(rhs.transpose());
  const qops::Matrix resid = rhs - xt.transpose() * lhs;
  double worst = 0.0;
  for (Index i = 0; i < k; ++i) worst = std::max(worst, resid.col(i).norm());
  return worst;
}

}  // namespace nmbath::dynamics
