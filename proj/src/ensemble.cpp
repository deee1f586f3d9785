#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nmbath/ratebath.hpp"

namespace nmbath::ratebath {

RateEnsemble RateEnsemble::from_entries(std::vector<RateEntry> entries) {
  if (entries.empty()) throw EnsembleError("rate ensemble must have at least one entry");
  double total = 0.0;
  for (const auto& e : entries) {
    if (!std::isfinite(e.rate) || e.rate < 0.0) {
      std::ostringstream os;
      os << "invalid rate " << e.rate << " (rates must be finite and >= 0)";
      throw EnsembleError(os.str());
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      std::ostringstream os;
      os << "invalid weight " << e.weight << " (weights must be finite and >= 0)";
      throw EnsembleError(os.str());
    }
    total += e.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << total << " (expected 1 within 1e-12)";
    throw EnsembleError(os.str());
  }
  std::erase_if(entries, [](const RateEntry& e) { return e.weight == 0.0; });

  std::sort(entries.begin(), entries.end(),
            [](const RateEntry& l, const RateEntry& r) { return l.rate > r.rate; });

  RateEnsemble out;
  for (const auto& e : entries) {
    if (!out.entries_.empty() &&
        out.entries_.back().rate - e.rate <= kMergeTolerance * out.entries_.back().rate) {
      auto& last = out.entries_.back();
      const double w = last.weight + e.weight;
      last.rate = (last.weight * last.rate + e.weight * e.rate) / w;
      last.weight = w;
    } else {
      out.entries_.push_back(e);
    }
  }
  return out;
}

RateEnsemble RateEnsemble::with_alpha(double alpha) const {
  RateEnsemble copy = *this;
  copy.alpha_ = alpha;
  return copy;
}

RateEnsemble single_rate(double gamma) { return RateEnsemble::from_entries({{gamma, 1.0}}); }

RateEnsemble two_state_ensemble(double p_up, double gamma_up, double gamma_down) {
  if (!(p_up >= 0.0 && p_up <= 1.0)) {
    std::ostringstream os;
    os << "two-state probability " << p_up << " outside [0, 1]";
    throw EnsembleError(os.str());
  }
  if (!(gamma_up > 0.0) || !(gamma_down > 0.0))
    throw EnsembleError("two-state rates must be > 0");
  return RateEnsemble::from_entries({{gamma_up, p_up}, {gamma_down, 1.0 - p_up}});
}

RateEnsemble manifold_ensemble(double gamma, double a, double b, int n) {
  if (n < 1) throw EnsembleError("manifold size N must be >= 1");
  if (!(gamma > 0.0)) throw EnsembleError("manifold base rate must be > 0");
  if (!(a > 0.0)) throw EnsembleError("manifold population decay a must be > 0");
  if (!std::isfinite(b)) throw EnsembleError("manifold coupling decay b must be finite");
  const double norm = std::expm1(-a) / std::expm1(-a * n);
  std::vector<RateEntry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) entries.push_back({gamma * std::exp(-b * r), norm * std::exp(-a * r)});
  auto ens = RateEnsemble::from_entries(std::move(entries));
  return b > 0.0 ? ens.with_alpha(a / b) : ens;
}

EnsembleStats stats(const RateEnsemble& ens) {
  EnsembleStats s;
  bool zero_rate = false;
  for (const auto& e : ens.entries()) {
    s.mean_rate += e.weight * e.rate;
    s.second_moment += e.weight * e.rate * e.rate;
    if (e.rate == 0.0) zero_rate = true;
    else s.mean_waiting_time += e.weight / e.rate;
  }
  if (zero_rate) s.mean_waiting_time = std::numeric_limits<double>::infinity();
  if (s.mean_rate > 0.0) {
    double var = 0.0;
    for (const auto& e : ens.entries()) var += e.weight * (e.rate - s.mean_rate) * (e.rate - s.mean_rate);
    s.beta = var / s.mean_rate;
  }
  if (ens.size() == 2) {
    const auto& e = ens.entries();
    s.eta = e[0].weight * e[1].rate + e[1].weight * e[0].rate;
  }
  s.alpha = ens.alpha();
  return s;
}

double survival(const RateEnsemble& ens, double t) {
  if (t < 0.0) throw std::invalid_argument("survival: negative time");
  double p = 0.0;
  for (const auto& e : ens.entries()) p += e.weight * std::exp(-e.rate * t);
  return p;
}

double waiting_density(const RateEnsemble& ens, double t) {
  if (t < 0.0) throw std::invalid_argument("waiting_density: negative time");
  double w = 0.0;
  for (const auto& e : ens.entries()) w += e.weight * e.rate * std::exp(-e.rate * t);
  return w;
}

Complex waiting_laplace(const RateEnsemble& ens, Complex u) {
  Complex w = 0.0;
  for (const auto& e : ens.entries()) w += e.weight * e.rate / (u + e.rate);
  return w;
}

Complex survival_laplace(const RateEnsemble& ens, Complex u) {
  Complex p = 0.0;
  for (const auto& e : ens.entries()) p += e.weight / (u + e.rate);
  return p;
}

Complex survival_laplace_derivative(const RateEnsemble& ens, Complex u) {
  Complex p = 0.0;
  for (const auto& e : ens.entries()) {
    const Complex z = u + e.rate;
    p -= e.weight / (z * z);
  }
  return p;
}

}  // namespace nmbath::ratebath
