#pragma once

#include <span>
#include <stdexcept>

namespace nmbath::ratebath {

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  /// R^2 below kPowerLawMinRSquared: the series is not a power law on the window.
  bool rejected = false;
};

inline constexpr double kPowerLawMinRSquared = 0.95;
inline constexpr int kPowerLawMinPoints = 10;

class FitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares fit of log w against log t over samples with t in
/// [t_lo, t_hi]. Needs at least 10 samples in the window, all with w > 0.
PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> w, double t_lo,
                          double t_hi);

}  // namespace nmbath::ratebath
