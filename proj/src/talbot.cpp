#include <cmath>
#include <numbers>

#include "nmbath/talbot.hpp"

namespace nmbath::ratebath {

std::vector<std::optional<double>> talbot_invert(const LaplaceFunction& f,
                                                 std::span<const double> times,
                                                 const TalbotOptions& options) {
  using Complex = std::complex<double>;
  const int m = options.nodes;
  std::vector<std::optional<double>> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const double r = options.contour_scale / t;
    double acc = 0.5 * (f(Complex(r + options.shift, 0.0)) * std::exp(r * t)).real();
    for (int k = 1; k < m; ++k) {
      const double theta = k * std::numbers::pi / m;
      const double cot = 1.0 / std::tan(theta);
      const Complex s(r * theta * cot, r * theta);
      const double sigma = theta + (theta * cot - 1.0) * cot;
      acc += (std::exp(t * s) * f(s + options.shift) * Complex(1.0, sigma)).real();
    }
    const double value = std::exp(options.shift * t) * r / m * acc;
    if (std::isfinite(value)) out.emplace_back(value);
    else out.emplace_back(std::nullopt);
  }
  return out;
}

}  // namespace nmbath::ratebath
