#include <cmath>
#include <sstream>
#include <vector>

#include "nmbath/powerlaw.hpp"

namespace nmbath::ratebath {

PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> w, double t_lo,
                          double t_hi) {
  if (t.size() != w.size()) throw FitError("power-law fit: t and w have different lengths");
  if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw FitError("power-law fit: window must satisfy 0 < t_lo < t_hi");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(w[i] > 0.0)) {
      std::ostringstream os;
      os << "power-law fit: non-positive sample w(" << t[i] << ") = " << w[i];
      throw FitError(os.str());
    }
    xs.push_back(std::log(t[i]));
    ys.push_back(std::log(w[i]));
  }
  const auto n = static_cast<int>(xs.size());
  if (n < kPowerLawMinPoints) {
    std::ostringstream os;
    os << "power-law fit: only " << n << " samples in [" << t_lo << ", " << t_hi << "], need "
       << kPowerLawMinPoints;
    throw FitError(os.str());
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    cxx += dx * dx;
    cxy += dx * dy;
    cyy += dy * dy;
  }
  if (cxx == 0.0) throw FitError("power-law fit: all samples share one time");
  PowerLawFit fit;
  fit.slope = cxy / cxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  fit.points = n;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.rejected = fit.r_squared < kPowerLawMinRSquared;
  return fit;
}

}  // namespace nmbath::ratebath
