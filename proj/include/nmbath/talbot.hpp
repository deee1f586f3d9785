#pragma once

// Numerical inverse Laplace transform on the fixed Talbot contour
//   s(theta) = shift + r theta (cot theta + i),  r = contour_scale / t.

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace nmbath::ratebath {

using LaplaceFunction = std::function<std::complex<double>(std::complex<double>)>;

struct TalbotOptions {
  int nodes = 32;
  /// r t; 2M/5 for the classic M = 32 contour. Kept fixed when nodes change so
  /// that doubling the node count refines the same contour integral.
  double contour_scale = 0.4 * 32;
  /// Contour origin; move it onto the rightmost singularity (e.g. minus the
  /// slowest rate) so decaying tails keep their relative accuracy.
  double shift = 0.0;
};

/// One value per requested time; std::nullopt marks points where the contour
/// evaluation overflowed or t <= 0.
std::vector<std::optional<double>> talbot_invert(const LaplaceFunction& f,
                                                 std::span<const double> times,
                                                 const TalbotOptions& options = {});

}  // namespace nmbath::ratebath
