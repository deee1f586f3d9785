#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nmbath/qrt.hpp"
#include "oracles.hpp"

using namespace nmbath;
using namespace nmbath::qrt;
using dynamics::Picture;

namespace {

Operator plus_state() {
  Operator r(2, 2);
  r << 0.5, 0.5, 0.5, 0.5;
  return r;
}

oracle::Matrix oracle_generator(const ModelSpec& m, double rate) {
  return oracle::superop_of(m.hamiltonian.rows(), [&](const oracle::Matrix& x) -> oracle::Matrix {
    return oracle::commutator_action(m.hamiltonian, x) + rate * oracle::lindblad_action(m.jumps, x);
  });
}

Operator oracle_evolve(const oracle::Matrix& gen, const Operator& x, double t) {
  return qops::devectorize(oracle::expm(gen * t) * qops::vectorize(x));
}

/// Schroedinger picture: sum_R P_R Tr{A e^{tau G_R}[e^{t G_R}[rho0] S]}.
Complex oracle_correlation(const ModelSpec& m, const Operator& rho0, const Operator& s, const Operator& a, double t,
                           double tau) {
  Complex acc = 0.0;
  for (const auto& e : m.ensemble.entries()) {
    const auto g = oracle_generator(m, e.rate);
    acc += e.weight * (a * oracle_evolve(g, oracle_evolve(g, rho0, t) * s, tau)).trace();
  }
  return acc;
}

/// Schroedinger picture: Tr{A <e^{tau G_R}>[rho(t) S]}, rho(t) the averaged state.
Complex oracle_prediction(const ModelSpec& m, const Operator& rho0, const Operator& s, const Operator& a, double t,
                          double tau) {
  const auto d = m.hamiltonian.rows();
  Operator rho_t = Operator::Zero(d, d);
  for (const auto& e : m.ensemble.entries()) rho_t += e.weight * oracle_evolve(oracle_generator(m, e.rate), rho0, t);
  Complex acc = 0.0;
  for (const auto& e : m.ensemble.entries())
    acc += e.weight * (a * oracle_evolve(oracle_generator(m, e.rate), rho_t * s, tau)).trace();
  return acc;
}

ObservableBasis matrix_units(Index d) {
  std::vector<Operator> ops;
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) {
      Operator e = Operator::Zero(d, d);
      e(i, j) = 1.0;
      ops.push_back(e);
    }
  return ObservableBasis(ops);
}

}  // namespace

TEST_CASE("observable basis") {
  const auto pauli = pauli_basis();
  CHECK(pauli.size() == 4);
  CHECK(pauli.gram_condition() == doctest::Approx(1.0));
  const Operator rho = plus_state();
  const auto tr = traces(pauli, rho);
  CHECK(std::abs(tr(0) - 1.0) < 1e-15);
  CHECK(std::abs(tr(1)) < 1e-15);
  CHECK(std::abs(tr(2)) < 1e-15);
  CHECK(std::abs(tr(3) - 1.0) < 1e-15);

  std::mt19937_64 rng(51);
  const Operator x = oracle::random_matrix(rng, 3);
  const auto units = matrix_units(3);
  const qops::Vector via_map = units.trace_map() * qops::vectorize(x);
  for (std::size_t mu = 0; mu < units.size(); ++mu)
    CHECK(std::abs(via_map(static_cast<Index>(mu)) - (units.operators()[mu] * x).trace()) < 1e-14);

  CHECK_THROWS_AS(ObservableBasis({qops::sigma_x(), qops::sigma_y(), qops::sigma_z()}), BasisError);
  CHECK_THROWS_AS(ObservableBasis({qops::sigma_x(), qops::sigma_y(), qops::sigma_z(), qops::sigma_z()}), BasisError);
  // Nearly dependent: Gram condition far above the limit.
  CHECK_THROWS_AS(ObservableBasis({qops::sigma_x(), qops::sigma_y(), qops::sigma_z(),
                                   Operator(qops::sigma_z() + 1e-5 * qops::identity_operator(2))}),
                  BasisError);
}

TEST_CASE("expectation series") {
  const auto ens = ratebath::two_state_ensemble(0.5, 2.0, 1.0);
  const auto model = dynamics::dephasing_model(1.0, ens, Picture::interaction);
  const std::vector<double> times{0.0, 0.5, 2.0};
  const auto x = expectation_series(model, plus_state(), pauli_basis(), times);
  REQUIRE(x.rows() == 3);
  REQUIRE(x.cols() == 4);
  for (Index k = 0; k < 3; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    CHECK(std::abs(x(k, 0) - oracle::survival(ens, t)) < 1e-12);
    CHECK(std::abs(x(k, 1)) < 1e-12);
    CHECK(std::abs(x(k, 2)) < 1e-12);
    CHECK(std::abs(x(k, 3) - 1.0) < 1e-12);
  }
}

TEST_CASE("two-time correlation and prediction against direct propagation") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 4; ++trial) {
    const Index d = 2 + trial % 2;
    const ModelSpec m{oracle::random_hermitian(rng, d), oracle::random_normalized_jumps(rng, d, 2),
                      oracle::random_ensemble(rng, 3), Picture::schroedinger};
    const Operator rho0 = oracle::random_density(rng, d);
    const Operator s = oracle::random_matrix(rng, d);
    const auto basis = matrix_units(d);
    const double t = 0.8;
    const std::vector<double> taus{0.0, 0.4, 1.5};
    const auto pred = qrt_prediction(m, rho0, s, basis, t, taus);
    for (std::size_t j = 0; j < taus.size(); ++j) {
      const auto actual = two_time_correlation(m, rho0, s, basis, t, taus[j]);
      for (std::size_t mu = 0; mu < basis.size(); ++mu) {
        const auto& a = basis.operators()[mu];
        const auto i = static_cast<Index>(mu);
        CHECK(std::abs(actual(i) - oracle_correlation(m, rho0, s, a, t, taus[j])) < 1e-10);
        CHECK(std::abs(pred[j](i) - oracle_prediction(m, rho0, s, a, t, taus[j])) < 1e-10);
      }
    }
    // Exact at tau = 0.
    CHECK((pred[0] - two_time_correlation(m, rho0, s, basis, t, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("single rate: the regression theorem holds") {
  std::mt19937_64 rng(57);
  const ModelSpec m{oracle::random_hermitian(rng, 2), oracle::random_normalized_jumps(rng, 2, 2),
                    ratebath::single_rate(1.3), Picture::schroedinger};
  const std::vector<double> ts{0.0, 0.7, 2.0};
  const std::vector<double> taus{0.0, 0.3, 1.0, 3.0};
  const auto surf = qrt_residual(m, oracle::random_density(rng, 2), oracle::random_matrix(rng, 2), pauli_basis(), ts, taus);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(surf.max_residual(i) < 1e-10);
}

TEST_CASE("dephasing residual matches the closed form") {
  const auto ens = ratebath::two_state_ensemble(0.5, 1.0, 2.0);
  CHECK(std::abs(dephasing_h(ens, 1.0, 1.0) - 0.013519) < 5e-6);
  CHECK(dephasing_h(ens, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK(dephasing_h(ens, 1.0, 0.0) == doctest::Approx(0.0));
  CHECK(dephasing_h(ratebath::single_rate(1.0), 1.0, 2.0) == doctest::Approx(0.0));

  const auto model = dynamics::dephasing_model(1.0, ens, Picture::interaction);
  const Operator s = qops::identity_operator(2);
  const std::vector<double> one{1.0};
  const auto point = qrt_residual(model, plus_state(), s, pauli_basis(), one, one);
  CHECK(std::abs(point.residual[0][0](0).real() - 0.0135192) < 1e-6);

  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(0.25 * k);
  std::mt19937_64 rng(59);
  const Operator rho0 = oracle::random_density(rng, 2);
  const Operator sr = oracle::random_matrix(rng, 2);
  const auto surf = qrt_residual(model, rho0, sr, pauli_basis(), grid, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      worst = std::max(worst, (surf.residual[i][j] - dephasing_residual(ens, rho0, sr, grid[i], grid[j])).cwiseAbs().maxCoeff());
      CHECK((surf.residual[i][j] - (surf.actual[i][j] - surf.predicted[i][j])).cwiseAbs().maxCoeff() == 0.0);
    }
  CHECK(worst < 1e-8);

  // No coherence, no residual.
  Operator diag = Operator::Zero(2, 2);
  diag(0, 0) = 0.3;
  diag(1, 1) = 0.7;
  const auto flat = qrt_residual(model, diag, sr, pauli_basis(), grid, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(flat.max_residual(i) < 1e-12);
}

TEST_CASE("stationary state and inhomogeneity amplitude") {
  const auto ens = ratebath::two_state_ensemble(0.5, 1.0, 2.0);
  std::mt19937_64 rng(61);
  const Operator rho0 = oracle::random_density(rng, 2);
  const auto deph = dynamics::dephasing_model(1.0, ens, Picture::schroedinger);
  const Operator inf = stationary_state(deph, rho0);
  CHECK(std::abs(inf(0, 0) - rho0(0, 0)) < 1e-12);
  CHECK(std::abs(inf(0, 1)) < 1e-12);

  // Long-time limit of the exact solver for a model with a unique steady state.
  const ModelSpec flip{0.5 * qops::sigma_z(), {qops::sigma_x()}, ens, Picture::schroedinger};
  const Operator flip_inf = stationary_state(flip, rho0);
  const std::vector<double> late{200.0};
  const auto far = dynamics::evolve_ensemble(flip, rho0, late);
  CHECK((far.states[0] - flip_inf).cwiseAbs().maxCoeff() < 1e-10);

  const Operator s = oracle::random_matrix(rng, 2);
  const auto amp = inhomogeneity_amplitude(deph, rho0, s, pauli_basis());
  const auto want = traces(pauli_basis(), Operator((rho0 - inf) * s));
  CHECK((amp - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dephasing analytic state") {
  const auto ens = ratebath::manifold_ensemble(1.0, 0.3, 0.6, 5);
  std::mt19937_64 rng(67);
  const Operator rho0 = oracle::random_density(rng, 2);
  const std::vector<double> times{0.0, 0.5, 3.0, 10.0};
  const auto exact = dynamics::evolve_ensemble(dynamics::dephasing_model(2.0, ens, Picture::interaction), rho0, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK((exact.states[k] - dephasing_analytic(ens, rho0, times[k])).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(dephasing_analytic(ens, Operator::Identity(3, 3) / 3.0, 1.0), qops::DimensionError);
}

TEST_CASE("Heisenberg generator is the trace adjoint") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 2 + trial % 3;
    const Operator h = oracle::random_hermitian(rng, d);
    const auto jumps = oracle::random_normalized_jumps(rng, d, 2);
    const double gamma = 0.7;
    const Superoperator gen(oracle::superop_of(d, [&](const oracle::Matrix& x) -> oracle::Matrix {
      return oracle::commutator_action(h, x) + gamma * oracle::lindblad_action(jumps, x);
    }));
    const auto adj = heisenberg_generator(gen);
    const Operator a = oracle::random_matrix(rng, d);
    const Operator x = oracle::random_matrix(rng, d);
    CHECK(std::abs((adj.apply(a) * x).trace() - (a * gen.apply(x)).trace()) < 1e-10);
    CHECK((adj.apply(a) - oracle::heisenberg_action(h, jumps, gamma, a)).cwiseAbs().maxCoeff() < 1e-10);

    const auto basis = matrix_units(d);
    const auto m = expectation_generator_matrix(gen, basis);
    const qops::Vector lhs = traces(basis, gen.apply(x));
    const qops::Vector rhs = m * traces(basis, x);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}
