#pragma once

// Rate ensembles {gamma_R, P_R} and the renewal-process quantities they
// induce: survival probability P0, waiting-time density w, their Laplace
// transforms, the memory kernel K(u) = w(u)/P0(u) and the sprinkling density.
//
// Rates are in units of the base rate gamma, times in units of 1/gamma.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmbath::ratebath {

using Complex = std::complex<double>;

struct RateEntry {
  double rate = 0.0;
  double weight = 0.0;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

class EnsembleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite distribution of dissipation rates.
///
/// Entries are sorted by descending rate. Zero-weight entries are dropped and
/// entries whose rates agree to a relative 1e-9 are merged (weights
/// summed), so every stored rate is distinct.
class RateEnsemble {
 public:
  /// Validates rates >= 0, weights >= 0 and sum of weights = 1 within 1e-12.
  static RateEnsemble from_entries(std::vector<RateEntry> entries);

  std::span<const RateEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  double rate(std::size_t i) const { return entries_.at(i).rate; }
  double weight(std::size_t i) const { return entries_.at(i).weight; }
  double slowest_rate() const noexcept { return entries_.back().rate; }
  double fastest_rate() const noexcept { return entries_.front().rate; }

  /// Power-law index a/b, set only for manifold ensembles with b > 0.
  std::optional<double> alpha() const noexcept { return alpha_; }
  RateEnsemble with_alpha(double alpha) const;

  friend bool operator==(const RateEnsemble&, const RateEnsemble&) = default;

 private:
  std::vector<RateEntry> entries_;
  std::optional<double> alpha_;
};

inline constexpr double kMergeTolerance = 1e-9;

RateEnsemble single_rate(double gamma);

/// w(t) = P_up gamma_up e^{-gamma_up t} + (1 - P_up) gamma_down e^{-gamma_down t}.
RateEnsemble two_state_ensemble(double p_up, double gamma_up, double gamma_down);

/// gamma_R = gamma e^{-bR}, P_R = (1 - e^{-a}) e^{-aR} / (1 - e^{-aN}), R = 0..N-1.
RateEnsemble manifold_ensemble(double gamma, double a, double b, int n);

struct EnsembleStats {
  double mean_rate = 0.0;          // <gamma>
  double mean_waiting_time = 0.0;  // <tau>, +inf if a zero rate is present
  double second_moment = 0.0;      // <gamma^2>
  double beta = 0.0;               // (<gamma^2> - <gamma>^2) / <gamma>
  std::optional<double> eta;       // P_1 gamma_2 + P_2 gamma_1, two-entry ensembles only
  std::optional<double> alpha;
};

EnsembleStats stats(const RateEnsemble& ens);

/// P0(t) = sum_R P_R e^{-gamma_R t}.
double survival(const RateEnsemble& ens, double t);
/// w(t) = -dP0/dt = sum_R P_R gamma_R e^{-gamma_R t}.
double waiting_density(const RateEnsemble& ens, double t);

/// w(u) = <gamma_R / (u + gamma_R)>, evaluated term by term.
Complex waiting_laplace(const RateEnsemble& ens, Complex u);
/// P0(u) = <1 / (u + gamma_R)>.
Complex survival_laplace(const RateEnsemble& ens, Complex u);
/// dP0/du = -<1 / (u + gamma_R)^2>.
Complex survival_laplace_derivative(const RateEnsemble& ens, Complex u);

/// Real polynomial, coefficients in ascending powers of u.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  static Polynomial constant(double c);
  /// prod_k (u - roots[k]).
  static Polynomial from_roots(std::span<const double> roots);

  std::size_t degree() const noexcept { return coeffs_.empty() ? 0 : coeffs_.size() - 1; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }
  Complex operator()(Complex u) const;

  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator*(double s) const;

 private:
  void trim();
  std::vector<double> coeffs_;
};

struct RationalSpectral {
  Polynomial numerator;
  Polynomial denominator;

  Complex operator()(Complex u) const { return numerator(u) / denominator(u); }
};

/// Exact rational w(u) with common denominator prod_R (u + gamma_R).
RationalSpectral spectral_w(const RateEnsemble& ens);
/// Exact rational P0(u); the numerator is monic of degree N - 1.
RationalSpectral spectral_P0(const RateEnsemble& ens);

struct KernelMode {
  double amplitude = 0.0;  // c_j
  double pole = 0.0;       // p_j < 0
};

/// K(t) = k0 delta(t) + sum_j c_j e^{p_j t}.
struct KernelDecomposition {
  double markov_weight = 0.0;
  std::vector<KernelMode> modes;

  Complex laplace(Complex u) const;
  /// Regular (non-delta) part of K(t).
  double regular(double t) const;
  /// f(t) for t > 0 from f(u) = K(u)/u.
  double sprinkling(double t) const;
  /// lim_{t -> inf} f(t) = k0 - sum_j c_j / p_j.
  double sprinkling_limit() const;
};

class RootFindingError : public std::runtime_error {
 public:
  RootFindingError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Highest numerator degree for which the companion-matrix route is used.
inline constexpr std::size_t kCompanionMaxDegree = 20;

enum class PoleMethod { automatic, companion, bracketed };

/// Partial-fraction decomposition of K(u) = w(u)/P0(u) = 1/P0(u) - u.
///
/// Poles are the N - 1 zeros of P0(u), one in each gap between consecutive
/// -gamma_R; amplitudes are c_j = 1 / P0'(p_j). Throws RootFindingError when
/// the poles fail to interlace the negated rates.
KernelDecomposition kernel_decompose(const RateEnsemble& ens,
                                     PoleMethod method = PoleMethod::automatic);

/// Sprinkling density f(t), t >= 0, via the kernel decomposition.
double sprinkling(const RateEnsemble& ens, double t);

}  // namespace nmbath::ratebath
