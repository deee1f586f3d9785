#pragma once

// Complete-monotone fractional model of the waiting-time distribution,
//   w(u) = <gamma> / (u + <gamma> + beta^{1-alpha} sigma(u)),
//   sigma(u) = (u + gamma_c)^alpha - gamma_c^alpha,
// whose cutoff gamma_c reproduces a finite mean waiting time through
//   alpha (beta / gamma_c)^{1-alpha} = <gamma><tau> - 1.

#include <complex>
#include <stdexcept>
#include <string>

namespace nmbath::ratebath {

class CutoffBracketError : public std::runtime_error {
 public:
  CutoffBracketError(const std::string& what, double residual_lo, double residual_hi)
      : std::runtime_error(what), residual_lo_(residual_lo), residual_hi_(residual_hi) {}
  double residual_lo() const noexcept { return residual_lo_; }
  double residual_hi() const noexcept { return residual_hi_; }

 private:
  double residual_lo_;
  double residual_hi_;
};

struct FractionalKernelModel {
  double alpha = 0.5;
  double mean_rate = 1.0;
  double beta = 1.0;
  double cutoff = 0.0;     // gamma_c
  double amplitude = 1.0;  // A_alpha = <gamma> / beta^{1-alpha}

  std::complex<double> sigma(std::complex<double> u) const;
  std::complex<double> waiting(std::complex<double> u) const;
  /// P0(u) = (1 - w(u)) / u.
  std::complex<double> survival(std::complex<double> u) const;
  /// K(u) = <gamma> / (1 + beta^{1-alpha} sigma(u) / u).
  std::complex<double> kernel(std::complex<double> u) const;
  /// f(u) = w(u) / (1 - w(u)).
  std::complex<double> sprinkling(std::complex<double> u) const;

  /// Small-u limit forms A/(A + u^alpha) and A u^{1-alpha}.
  std::complex<double> waiting_limit(std::complex<double> u) const;
  std::complex<double> kernel_limit(std::complex<double> u) const;

  /// alpha (beta / gamma_c)^{1-alpha} - (<gamma><tau> - 1).
  double cutoff_residual(double gamma_c, double mean_waiting_time) const;
};

inline constexpr double kCutoffBracketLo = 1e-12;
inline constexpr double kCutoffBracketHi = 1e3;

/// Builds the model; an infinite <tau> gives gamma_c = 0 (pure power law),
/// otherwise gamma_c is found by bisection on [1e-12, 1e3].
FractionalKernelModel fractional_model(double alpha, double mean_rate, double beta,
                                       double mean_waiting_time);

}  // namespace nmbath::ratebath
