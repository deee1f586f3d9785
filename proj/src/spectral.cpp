#include <algorithm>

#include "nmbath/ratebath.hpp"

namespace nmbath::ratebath {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

Polynomial Polynomial::constant(double c) { return Polynomial({c}); }

Polynomial Polynomial::from_roots(std::span<const double> roots) {
  Polynomial p = constant(1.0);
  for (double r : roots) p = p * Polynomial({-r, 1.0});
  return p;
}

void Polynomial::trim() {
  while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Complex Polynomial::operator()(Complex u) const {
  Complex acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * u + *it;
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  std::vector<double> c(std::max(coeffs_.size(), rhs.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
  for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) c[i] += rhs.coeffs_[i];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  if (coeffs_.empty() || rhs.coeffs_.empty()) return Polynomial();
  std::vector<double> c(coeffs_.size() + rhs.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * rhs.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> c = coeffs_;
  for (auto& x : c) x *= s;
  return Polynomial(std::move(c));
}

namespace {

std::vector<double> negated_rates(const RateEnsemble& ens) {
  std::vector<double> roots;
  for (const auto& e : ens.entries()) roots.push_back(-e.rate);
  return roots;
}

/// sum_R coeff(R) prod_{S != R} (u + gamma_S)
template <typename Coeff>
Polynomial partial_products(const RateEnsemble& ens, Coeff coeff) {
  const auto roots = negated_rates(ens);
  Polynomial acc = Polynomial::constant(0.0);
  for (std::size_t r = 0; r < roots.size(); ++r) {
    std::vector<double> others;
    for (std::size_t s = 0; s < roots.size(); ++s)
      if (s != r) others.push_back(roots[s]);
    acc = acc + Polynomial::from_roots(others) * coeff(ens.entries()[r]);
  }
  return acc;
}

}  // namespace

RationalSpectral spectral_w(const RateEnsemble& ens) {
  return {partial_products(ens, [](const RateEntry& e) { return e.weight * e.rate; }),
          Polynomial::from_roots(negated_rates(ens))};
}

RationalSpectral spectral_P0(const RateEnsemble& ens) {
  return {partial_products(ens, [](const RateEntry& e) { return e.weight; }),
          Polynomial::from_roots(negated_rates(ens))};
}

}  // namespace nmbath::ratebath
