#include <cmath>
#include <sstream>

#include "nmbath/dynamics.hpp"

namespace nmbath::dynamics {

namespace {

using qops::Matrix;
using qops::Vector;

struct Stepper {
  double h = 0.0;
  Matrix markov_step;  // exp(h (L_H + k0 L))
  Matrix dissipator;   // L
  std::vector<Matrix> memory_step;  // e^{h p_j} exp(h L_H)
  std::vector<double> amplitudes;   // c_j

  Stepper(const CompiledModel& model, const ratebath::KernelDecomposition& kernel, double step)
      : h(step), dissipator(model.dissipator().matrix()) {
    const Superoperator markov = model.generator(kernel.markov_weight);
    markov_step = qops::propagate(markov, h).matrix();
    const Matrix free_step = qops::propagate(model.hamiltonian_part(), h).matrix();
    for (const auto& mode : kernel.modes) {
      memory_step.push_back(std::exp(mode.pole * h) * free_step);
      amplitudes.push_back(mode.amplitude);
    }
  }

  // Predictor-corrector step of (rho, m_1..m_J).
  void advance(Vector& rho, std::vector<Vector>& memories) const {
    const Vector x_n = dissipator * rho;
    Vector m_n = Vector::Zero(rho.size());
    for (const auto& m : memories) m_n += m;

    std::vector<Vector> carried(memories.size());
    for (std::size_t j = 0; j < memories.size(); ++j)
      carried[j] = memory_step[j] * (memories[j] + 0.5 * h * amplitudes[j] * x_n);

    const Vector rho_free = markov_step * rho;
    const Vector rho_pred = rho_free + h * (markov_step * m_n);
    const Vector x_pred = dissipator * rho_pred;
    Vector m_pred = Vector::Zero(rho.size());
    for (std::size_t j = 0; j < memories.size(); ++j)
      m_pred += carried[j] + 0.5 * h * amplitudes[j] * x_pred;

    rho = rho_free + 0.5 * h * (markov_step * m_n + m_pred);
    const Vector x_next = dissipator * rho;
    for (std::size_t j = 0; j < memories.size(); ++j)
      memories[j] = carried[j] + 0.5 * h * amplitudes[j] * x_next;
  }
};

std::vector<Vector> integrate(const CompiledModel& model, const Vector& v0,
                              std::span<const double> times,
                              const ratebath::KernelDecomposition& kernel, int substeps) {
  std::vector<Vector> out;
  out.reserve(times.size());
  out.push_back(v0);
  if (times.size() < 2) return out;
  const double interval = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  const Stepper stepper(model, kernel, interval / substeps);
  Vector rho = v0;
  std::vector<Vector> memories(kernel.modes.size(), Vector::Zero(v0.size()));
  for (std::size_t k = 1; k < times.size(); ++k) {
    for (int s = 0; s < substeps; ++s) stepper.advance(rho, memories);
    out.push_back(rho);
  }
  return out;
}

}  // namespace

std::vector<Operator> volterra_series(const CompiledModel& model, const Operator& op0,
                                      std::span<const double> times,
                                      const ratebath::KernelDecomposition& kernel,
                                      const VolterraOptions& options, double* step_error_estimate) {
  if (times.empty()) return {};
  if (times.front() != 0.0) throw std::invalid_argument("volterra: time grid must start at 0");
  if (!is_uniform(times)) throw std::invalid_argument("volterra: time grid must be uniform");

  double mean_rate = 0.0;
  for (const auto& e : model.spec().ensemble.entries()) mean_rate += e.weight * e.rate;
  int substeps = 1;
  if (times.size() > 1 && mean_rate > 0.0) {
    const double interval = times[1] - times[0];
    const double h_max = options.max_step / mean_rate;
    substeps = std::max(1, static_cast<int>(std::ceil(interval / h_max - 1e-9)));
  }

  const Vector v0 = qops::vectorize(op0);
  const auto coarse = integrate(model, v0, times, kernel, substeps);
  const auto fine = integrate(model, v0, times, kernel, 2 * substeps);

  double estimate = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    estimate = std::max(estimate, (fine[k] - coarse[k]).cwiseAbs().maxCoeff());
  if (step_error_estimate != nullptr) *step_error_estimate = estimate;
  if (estimate > options.richardson_tolerance) {
    std::ostringstream os;
    os << "volterra step too coarse: h vs h/2 differ by " << estimate << " (tolerance "
       << options.richardson_tolerance << ")";
    throw StepSizeError(os.str(), estimate);
  }

  std::vector<Operator> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Vector v = options.extrapolate ? Vector((4.0 * fine[k] - coarse[k]) / 3.0) : fine[k];
    out.push_back(model.to_picture(qops::devectorize(v), times[k]));
  }
  return out;
}

EvolutionResult evolve_volterra(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times,
                                const ratebath::KernelDecomposition& kernel,
                                const VolterraOptions& options) {
  qops::validate_density_matrix(rho0);
  const CompiledModel compiled(model);
  EvolutionResult result;
  result.solver = "volterra";
  result.times.assign(times.begin(), times.end());
  double estimate = 0.0;
  result.states = volterra_series(compiled, rho0, times, kernel, options, &estimate);
  result.step_error_estimate = estimate;
  compute_diagnostics(result);
  return result;
}

}  // namespace nmbath::dynamics
