#include <sstream>

#include "nmbath/dynamics.hpp"

namespace nmbath::dynamics {

namespace {

qops::Matrix solve_checked(const qops::Matrix& a, const qops::Matrix& b, Complex u, const char* what) {
  Eigen::FullPivLU<qops::Matrix> lu(a);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    std::ostringstream os;
    os << what << " is singular at u = " << u;
    throw qops::SingularResolventError(os.str(), u);
  }
  return lu.solve(b);
}

}  // namespace

Superoperator exact_memory_superop(const ModelSpec& model, Complex u) {
  const CompiledModel compiled(model);
  const Index n = compiled.dim() * compiled.dim();
  qops::Matrix avg_g = qops::Matrix::Zero(n, n);
  qops::Matrix avg_gl = qops::Matrix::Zero(n, n);
  for (const auto& e : model.ensemble.entries()) {
    const qops::Matrix g = qops::resolvent(compiled.generator(e.rate), u).matrix();
    avg_g += e.weight * g;
    avg_gl += (e.weight * e.rate) * (g * compiled.dissipator().matrix());
  }
  return Superoperator(solve_checked(avg_g, avg_gl, u, "average resolvent"));
}

Superoperator effective_memory_superop(const ModelSpec& model, Complex u) {
  const CompiledModel compiled(model);
  const Index n = compiled.dim() * compiled.dim();
  const qops::Matrix id = qops::Matrix::Identity(n, n);
  const qops::Matrix z = u * id - compiled.hamiltonian_part().matrix();
  qops::Matrix p0 = qops::Matrix::Zero(n, n);
  for (const auto& e : model.ensemble.entries())
    p0 += e.weight * solve_checked(z + e.rate * id, id, u, "shifted free resolvent");
  const qops::Matrix k = solve_checked(p0, id, u, "matrix survival function") - z;
  return Superoperator(k * compiled.dissipator().matrix());
}

}  // namespace nmbath::dynamics
