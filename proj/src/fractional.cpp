#include <cmath>
#include <sstream>

#include "nmbath/fractional.hpp"

namespace nmbath::ratebath {

using Complex = std::complex<double>;

Complex FractionalKernelModel::sigma(Complex u) const {
  return std::pow(u + cutoff, alpha) - std::pow(cutoff, alpha);
}

Complex FractionalKernelModel::waiting(Complex u) const {
  return mean_rate / (u + mean_rate + std::pow(beta, 1.0 - alpha) * sigma(u));
}

Complex FractionalKernelModel::survival(Complex u) const {
  // (1 - w)/u written without the cancellation at small u.
  const Complex denom = u + mean_rate + std::pow(beta, 1.0 - alpha) * sigma(u);
  return (1.0 + std::pow(beta, 1.0 - alpha) * sigma(u) / u) / denom;
}

Complex FractionalKernelModel::kernel(Complex u) const {
  return mean_rate / (1.0 + std::pow(beta, 1.0 - alpha) * sigma(u) / u);
}

Complex FractionalKernelModel::sprinkling(Complex u) const { return kernel(u) / u; }

Complex FractionalKernelModel::waiting_limit(Complex u) const {
  return amplitude / (amplitude + std::pow(u, alpha));
}

Complex FractionalKernelModel::kernel_limit(Complex u) const {
  return amplitude * std::pow(u, 1.0 - alpha);
}

double FractionalKernelModel::cutoff_residual(double gamma_c, double mean_waiting_time) const {
  return alpha * std::pow(beta / gamma_c, 1.0 - alpha) - (mean_rate * mean_waiting_time - 1.0);
}

FractionalKernelModel fractional_model(double alpha, double mean_rate, double beta,
                                       double mean_waiting_time) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("fractional model needs 0 < alpha < 1");
  if (!(mean_rate > 0.0)) throw std::invalid_argument("fractional model needs <gamma> > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("fractional model needs beta > 0");

  FractionalKernelModel m;
  m.alpha = alpha;
  m.mean_rate = mean_rate;
  m.beta = beta;
  m.amplitude = mean_rate / std::pow(beta, 1.0 - alpha);
  if (std::isinf(mean_waiting_time)) {
    m.cutoff = 0.0;
    return m;
  }

  // The residual decreases monotonically in gamma_c; bisect in log space.
  double lo = kCutoffBracketLo;
  double hi = kCutoffBracketHi;
  const double r_lo = m.cutoff_residual(lo, mean_waiting_time);
  const double r_hi = m.cutoff_residual(hi, mean_waiting_time);
  if (!(r_lo > 0.0 && r_hi < 0.0)) {
    std::ostringstream os;
    os << "cutoff relation has no root in [" << lo << ", " << hi << "]: residuals " << r_lo
       << " and " << r_hi;
    throw CutoffBracketError(os.str(), r_lo, r_hi);
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = std::sqrt(lo * hi);
    if (m.cutoff_residual(mid, mean_waiting_time) > 0.0) lo = mid;
    else hi = mid;
    if (hi / lo - 1.0 < 1e-15) break;
  }
  m.cutoff = std::sqrt(lo * hi);
  return m;
}

}  // namespace nmbath::ratebath
