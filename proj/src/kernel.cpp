#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "nmbath/ratebath.hpp"

namespace nmbath::ratebath {

namespace {

double p0_real(const RateEnsemble& ens, double u) {
  double p = 0.0;
  for (const auto& e : ens.entries()) p += e.weight / (u + e.rate);
  return p;
}

double p0_real_derivative(const RateEnsemble& ens, double u) {
  double p = 0.0;
  for (const auto& e : ens.entries()) {
    const double z = u + e.rate;
    p -= e.weight / (z * z);
  }
  return p;
}

// Poles must satisfy -gamma_k < p_k < -gamma_{k+1} with rates descending.
bool interlaces(const RateEnsemble& ens, const std::vector<double>& poles) {
  if (poles.size() + 1 != ens.size()) return false;
  for (std::size_t k = 0; k < poles.size(); ++k) {
    if (!(poles[k] > -ens.rate(k) && poles[k] < -ens.rate(k + 1))) return false;
  }
  return true;
}

std::vector<double> companion_poles(const RateEnsemble& ens) {
  const auto num = spectral_P0(ens).numerator;
  const auto c = num.coefficients();
  const auto n = static_cast<Eigen::Index>(num.degree());
  std::vector<double> poles;
  if (n == 0) return poles;
  const double lead = c.back();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)] / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) return poles;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-8 * std::max(1.0, std::abs(z.real()))) return {};
    double p = z.real();
    // One Newton step on the secular form of P0, kept only if it helps.
    const double step = p0_real(ens, p) / p0_real_derivative(ens, p);
    if (std::isfinite(step) && std::abs(p0_real(ens, p - step)) < std::abs(p0_real(ens, p)))
      p -= step;
    poles.push_back(p);
  }
  std::sort(poles.begin(), poles.end());
  return poles;
}

// P0 decreases monotonically from +inf to -inf on (-gamma_k, -gamma_{k+1}),
// so each gap holds exactly one zero; safeguarded Newton keeps the bracket.
double bracketed_root(const RateEnsemble& ens, double lo, double hi) {
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    const double f = p0_real(ens, x);
    if (f == 0.0) return x;
    if (f > 0.0) lo = x;
    else hi = x;
    const double df = p0_real_derivative(ens, x);
    double next = x - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
      return next;
    x = next;
  }
  return x;
}

std::vector<double> bracketed_poles(const RateEnsemble& ens) {
  std::vector<double> poles;
  for (std::size_t k = 0; k + 1 < ens.size(); ++k)
    poles.push_back(bracketed_root(ens, -ens.rate(k), -ens.rate(k + 1)));
  return poles;
}

double max_residual(const RateEnsemble& ens, const std::vector<double>& poles) {
  double r = 0.0;
  for (double p : poles) r = std::max(r, std::abs(p0_real(ens, p) / p0_real_derivative(ens, p)));
  return poles.empty() ? 0.0 : r;
}

}  // namespace

Complex KernelDecomposition::laplace(Complex u) const {
  Complex k = markov_weight;
  for (const auto& m : modes) k += m.amplitude / (u - m.pole);
  return k;
}

double KernelDecomposition::regular(double t) const {
  double k = 0.0;
  for (const auto& m : modes) k += m.amplitude * std::exp(m.pole * t);
  return k;
}

double KernelDecomposition::sprinkling(double t) const {
  if (t < 0.0) throw std::invalid_argument("sprinkling: negative time");
  double f = markov_weight;
  for (const auto& m : modes) f += (m.amplitude / m.pole) * std::expm1(m.pole * t);
  return f;
}

double KernelDecomposition::sprinkling_limit() const {
  double f = markov_weight;
  for (const auto& m : modes) f -= m.amplitude / m.pole;
  return f;
}

KernelDecomposition kernel_decompose(const RateEnsemble& ens, PoleMethod method) {
  KernelDecomposition out;
  for (const auto& e : ens.entries()) out.markov_weight += e.weight * e.rate;
  if (ens.size() == 1) return out;

  const std::size_t degree = ens.size() - 1;
  std::vector<double> poles;
  if (method == PoleMethod::companion ||
      (method == PoleMethod::automatic && degree <= kCompanionMaxDegree)) {
    poles = companion_poles(ens);
    if (!interlaces(ens, poles)) {
      if (method == PoleMethod::companion) {
        std::ostringstream os;
        os << "companion-matrix poles do not interlace the negated rates (residual "
           << max_residual(ens, poles) << ")";
        throw RootFindingError(os.str(), max_residual(ens, poles));
      }
      poles.clear();
    }
  }
  if (poles.empty()) poles = bracketed_poles(ens);
  if (!interlaces(ens, poles)) {
    const double r = max_residual(ens, poles);
    std::ostringstream os;
    os << "kernel poles could not be separated (residual " << r << ")";
    throw RootFindingError(os.str(), r);
  }
  for (double p : poles) out.modes.push_back({1.0 / p0_real_derivative(ens, p), p});
  return out;
}

double sprinkling(const RateEnsemble& ens, double t) { return kernel_decompose(ens).sprinkling(t); }

}  // namespace nmbath::ratebath
