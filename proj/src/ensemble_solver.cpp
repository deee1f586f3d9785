#include "nmbath/dynamics.hpp"

namespace nmbath::dynamics {

std::vector<Operator> ensemble_series(const CompiledModel& model, const Operator& op0,
                                      std::span<const double> times) {
  const auto& ens = model.spec().ensemble;
  const qops::Vector v0 = qops::vectorize(op0);
  std::vector<qops::Vector> acc(times.size(), qops::Vector::Zero(v0.size()));
  for (const auto& entry : ens.entries()) {
    const qops::Propagator prop(model.generator(entry.rate));
    for (std::size_t k = 0; k < times.size(); ++k)
      acc[k] += entry.weight * (prop.at(times[k]).matrix() * v0);
  }
  std::vector<Operator> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k)
    out.push_back(model.to_picture(qops::devectorize(acc[k]), times[k]));
  return out;
}

Superoperator ensemble_map(const CompiledModel& model, double t) {
  const Index d = model.dim();
  qops::Matrix acc = qops::Matrix::Zero(d * d, d * d);
  for (const auto& entry : model.spec().ensemble.entries())
    acc += entry.weight * qops::propagate(model.generator(entry.rate), t).matrix();
  Superoperator map(std::move(acc));
  if (model.spec().picture == Picture::interaction)
    map = qops::propagate(-1.0 * model.hamiltonian_part(), t) * map;
  return map;
}

EvolutionResult evolve_ensemble(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times) {
  qops::validate_density_matrix(rho0);
  const CompiledModel compiled(model);
  EvolutionResult result;
  result.solver = "ensemble";
  result.times.assign(times.begin(), times.end());
  result.states = ensemble_series(compiled, rho0, times);
  compute_diagnostics(result);
  return result;
}

}  // namespace nmbath::dynamics
