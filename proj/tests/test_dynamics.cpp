#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "nmbath/dynamics.hpp"
#include "oracles.hpp"

using namespace nmbath;
using namespace nmbath::dynamics;
using ratebath::RateEnsemble;

namespace {

const Complex I1(0.0, 1.0);

Operator plus_state() {
  Operator r(2, 2);
  r << 0.5, 0.5, 0.5, 0.5;
  return r;
}

double max_abs(const Operator& a) { return a.cwiseAbs().maxCoeff(); }

/// H = sigma_z / 2 with a sigma_x jump: free motion and dissipation do not commute.
ModelSpec flip_model(RateEnsemble ens, Picture picture = Picture::schroedinger) {
  return {0.5 * qops::sigma_z(), {qops::sigma_x()}, std::move(ens), picture};
}

/// Exact ensemble average from oracle expm of directly assembled generators.
Operator ensemble_oracle(const ModelSpec& m, const Operator& rho0, double t) {
  const auto d = m.hamiltonian.rows();
  Operator out = Operator::Zero(d, d);
  for (const auto& e : m.ensemble.entries()) {
    const auto gen = oracle::superop_of(d, [&](const oracle::Matrix& x) -> oracle::Matrix {
      return oracle::commutator_action(m.hamiltonian, x) + e.rate * oracle::lindblad_action(m.jumps, x);
    });
    const qops::Vector v = oracle::expm(gen * t) * qops::vectorize(rho0);
    out += e.weight * qops::devectorize(v);
  }
  return out;
}

/// The memory-kernel equation rewritten as a linear ODE on (rho, m_1..m_n):
///   rho' = L_H rho + k0 L rho + sum_j m_j,   m_j' = (p_j + L_H) m_j + c_j L rho,
/// solved by one oracle exponential of the block generator.
Operator augmented_oracle(const ModelSpec& m, const ratebath::KernelDecomposition& k, const Operator& rho0,
                          double t) {
  const auto d = m.hamiltonian.rows();
  const auto n = d * d;
  const auto lh = oracle::superop_of(d, [&](const oracle::Matrix& x) { return oracle::commutator_action(m.hamiltonian, x); });
  const auto l = oracle::superop_of(d, [&](const oracle::Matrix& x) { return oracle::lindblad_action(m.jumps, x); });
  const auto blocks = static_cast<Eigen::Index>(k.modes.size() + 1);
  oracle::Matrix g = oracle::Matrix::Zero(n * blocks, n * blocks);
  g.block(0, 0, n, n) = lh + k.markov_weight * l;
  for (Eigen::Index j = 1; j < blocks; ++j) {
    const auto& mode = k.modes[static_cast<std::size_t>(j - 1)];
    g.block(0, j * n, n, n) = oracle::Matrix::Identity(n, n);
    g.block(j * n, 0, n, n) = mode.amplitude * l;
    g.block(j * n, j * n, n, n) = lh + mode.pole * oracle::Matrix::Identity(n, n);
  }
  qops::Vector x0 = qops::Vector::Zero(n * blocks);
  x0.head(n) = qops::vectorize(rho0);
  const qops::Vector x = oracle::expm(g * t) * x0;
  return qops::devectorize(x.head(n));
}

}  // namespace

TEST_CASE("dephasing coherence decays with the survival probability") {
  const auto ens = ratebath::two_state_ensemble(0.5, 2.0, 1.0);
  const auto times = uniform_grid(6.0, 61);
  const double omega = 1.3;

  const auto inter = evolve_ensemble(dephasing_model(omega, ens, Picture::interaction), plus_state(), times);
  const auto schr = evolve_ensemble(dephasing_model(omega, ens, Picture::schroedinger), plus_state(), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double p0 = oracle::survival(ens, times[k]);
    CHECK(std::abs(inter.states[k](0, 1) - 0.5 * p0) < 1e-12);
    CHECK(std::abs(inter.states[k](0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(schr.states[k](0, 1) - 0.5 * p0 * std::exp(-I1 * omega * times[k])) < 1e-12);
    CHECK(std::abs(schr.states[k](1, 0) - 0.5 * p0 * std::exp(I1 * omega * times[k])) < 1e-12);
    CHECK(inter.trace_drift[k] < 1e-12);
    CHECK(inter.min_eigenvalue[k] > -1e-12);
  }
}

TEST_CASE("ensemble solver against oracle exponentials on random models") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::Index d = 2 + trial % 2;
    ModelSpec m{oracle::random_hermitian(rng, d), oracle::random_normalized_jumps(rng, d, 2),
                oracle::random_ensemble(rng, 4), Picture::schroedinger};
    const Operator rho0 = oracle::random_density(rng, d);
    const std::vector<double> times{0.0, 0.3, 1.7, 4.0};
    const auto res = evolve_ensemble(m, rho0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      CHECK(max_abs(res.states[k] - ensemble_oracle(m, rho0, times[k])) < 1e-10);
      CHECK(res.trace_drift[k] < 1e-12);
      CHECK(res.min_eigenvalue[k] > -1e-10);
      CHECK(qops::hermiticity_defect(res.states[k]) < 1e-12);
    }
    // Interaction picture output is e^{iHt} rho e^{-iHt}.
    m.picture = Picture::interaction;
    const auto ip = evolve_ensemble(m, rho0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Operator u = oracle::expm(-I1 * m.hamiltonian * times[k]);
      CHECK(max_abs(ip.states[k] - u.adjoint() * res.states[k] * u) < 1e-10);
    }
  }
}

TEST_CASE("ensemble map is completely positive and matches the series") {
  const auto ens = ratebath::manifold_ensemble(1.0, 0.3, 0.6, 5);
  const CompiledModel model(flip_model(ens));
  const auto times = uniform_grid(5.0, 11);
  const auto maps = reconstruct_maps(2, times.size(), [&](const Operator& e) { return ensemble_series(model, e, times); });
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK((maps[k].matrix() - ensemble_map(model, times[k]).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(qops::choi_min_eigenvalue(maps[k]) > -qops::kChoiTolerance);
  }
}

TEST_CASE("Volterra solver agrees with the exact solution when L_H and L commute") {
  const auto ens = ratebath::two_state_ensemble(0.5, 3.0, 0.3);
  const auto kernel = ratebath::kernel_decompose(ens);
  const auto times = uniform_grid(10.0, 201);
  for (auto pic : {Picture::interaction, Picture::schroedinger}) {
    const auto model = dephasing_model(1.0, ens, pic);
    const auto exact = evolve_ensemble(model, plus_state(), times);
    const auto vol = evolve_volterra(model, plus_state(), times, kernel);
    REQUIRE(vol.step_error_estimate);
    CHECK(*vol.step_error_estimate < 1e-4);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) worst = std::max(worst, max_abs(vol.states[k] - exact.states[k]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("Volterra solver integrates the memory-kernel equation") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 3; ++trial) {
    const auto ens = oracle::random_ensemble(rng, 3, 0.3, 3.0);
    const auto kernel = ratebath::kernel_decompose(ens);
    const ModelSpec m{oracle::random_hermitian(rng, 2), oracle::random_normalized_jumps(rng, 2, 2), ens,
                      Picture::schroedinger};
    const Operator rho0 = oracle::random_density(rng, 2);
    const auto times = uniform_grid(4.0, 41);
    const auto vol = evolve_volterra(m, rho0, times, kernel);
    for (std::size_t k = 0; k < times.size(); k += 5)
      CHECK(max_abs(vol.states[k] - augmented_oracle(m, kernel, rho0, times[k])) < 1e-7);
  }
}

TEST_CASE("Volterra solver differs from the exact dynamics when L_H and L do not commute") {
  const auto ens = ratebath::two_state_ensemble(0.5, 3.0, 0.3);
  const auto m = flip_model(ens);
  CHECK(CompiledModel(m).commutator_norm() > 0.1);
  const auto times = uniform_grid(10.0, 201);
  const auto exact = evolve_ensemble(m, plus_state(), times);
  const auto vol = evolve_volterra(m, plus_state(), times, ratebath::kernel_decompose(ens));
  double gap = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) gap = std::max(gap, max_abs(vol.states[k] - exact.states[k]));
  CHECK(gap > 1e-2);
  CHECK(max_abs(vol.states.back() - augmented_oracle(m, ratebath::kernel_decompose(ens), plus_state(), 10.0)) < 1e-7);
}

TEST_CASE("single rate reduces every solver to the Lindblad semigroup") {
  const auto ens = ratebath::single_rate(0.8);
  std::mt19937_64 rng(47);
  const ModelSpec m{oracle::random_hermitian(rng, 2), oracle::random_normalized_jumps(rng, 2, 3), ens,
                    Picture::schroedinger};
  const Operator rho0 = oracle::random_density(rng, 2);
  const auto times = uniform_grid(5.0, 51);
  const auto vol = evolve_volterra(m, rho0, times, ratebath::kernel_decompose(ens));
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(max_abs(vol.states[k] - ensemble_oracle(m, rho0, times[k])) < 1e-8);

  MCConfig cfg;
  cfg.trajectories = 20000;
  cfg.seed = 5;
  const auto mc = mc_trajectories(m, rho0, times, cfg);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Operator ref = ensemble_oracle(m, rho0, times[k]);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(std::abs(mc.states[k](i, j).real() - ref(i, j).real()) <= 4.0 * mc.stderr_re[k](i, j) + 1e-12);
        CHECK(std::abs(mc.states[k](i, j).imag() - ref(i, j).imag()) <= 4.0 * mc.stderr_im[k](i, j) + 1e-12);
      }
  }
}

TEST_CASE("memory superoperators") {
  const auto ens = ratebath::two_state_ensemble(0.4, 2.5, 0.5);
  const auto deph = dephasing_model(0.7, ens, Picture::schroedinger);
  for (Complex u : {Complex(1.0, 0.0), Complex(2.0, 1.0)}) {
    const auto exact = exact_memory_superop(deph, u);
    const auto eff = effective_memory_superop(deph, u);
    CHECK((exact.matrix() - eff.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  }

  // Single rate: gamma L at every u.
  const auto single = flip_model(ratebath::single_rate(1.7));
  const CompiledModel cm(single);
  for (Complex u : {Complex(0.5, 0.0), Complex(3.0, -2.0)}) {
    CHECK((exact_memory_superop(single, u).matrix() - 1.7 * cm.dissipator().matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((effective_memory_superop(single, u).matrix() - 1.7 * cm.dissipator().matrix()).cwiseAbs().maxCoeff() <
          1e-10);
  }

  // Non-commuting model: the two kernels differ at finite u, agree as u grows.
  const auto flip = flip_model(ens);
  const CompiledModel fm(flip);
  const double mean = ratebath::stats(ens).mean_rate;
  CHECK((exact_memory_superop(flip, 1.0).matrix() - effective_memory_superop(flip, 1.0).matrix()).cwiseAbs().maxCoeff() >
        1e-3);
  const Complex big(1e6, 0.0);
  const double scale = fm.dissipator().matrix().cwiseAbs().maxCoeff();
  CHECK((exact_memory_superop(flip, big).matrix() - mean * fm.dissipator().matrix()).cwiseAbs().maxCoeff() <
        1e-4 * scale);
  CHECK((effective_memory_superop(flip, big).matrix() - mean * fm.dissipator().matrix()).cwiseAbs().maxCoeff() <
        1e-4 * scale);
}

TEST_CASE("Monte Carlo dephasing matches the exact solution") {
  const auto ens = ratebath::two_state_ensemble(0.5, 2.0, 1.0);
  const auto times = uniform_grid(5.0, 51);
  const auto model = dephasing_model(1.0, ens, Picture::interaction);
  const auto exact = evolve_ensemble(model, plus_state(), times);
  for (auto scheme : {MCScheme::frozen_rate, MCScheme::renewal}) {
    MCConfig cfg;
    cfg.trajectories = 100000;
    cfg.seed = 11;
    cfg.scheme = scheme;
    const auto mc = mc_trajectories(model, plus_state(), times, cfg);
    CHECK(mc.solver == to_string(scheme));
    CHECK(mc.trajectories == 100000);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double diff = std::abs(mc.states[k](0, 1).real() - exact.states[k](0, 1).real());
      CHECK(diff <= 3.0 * mc.stderr_re[k](0, 1) + 1e-12);
      CHECK(mc.stderr_re[k](0, 1) < 2e-3);
    }
  }
}

TEST_CASE("Monte Carlo frozen-rate unraveling is exact for non-commuting models") {
  const auto ens = ratebath::two_state_ensemble(0.5, 3.0, 0.3);
  const auto m = flip_model(ens);
  const auto times = uniform_grid(5.0, 26);
  const auto exact = evolve_ensemble(m, plus_state(), times);
  const auto vol = evolve_volterra(m, plus_state(), times, ratebath::kernel_decompose(ens));
  MCConfig cfg;
  cfg.trajectories = 40000;
  cfg.seed = 3;
  const auto mc = mc_trajectories(m, plus_state(), times, cfg);
  double worst_z_exact = 0.0;
  double worst_z_vol = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k)
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        const double se = mc.stderr_re[k](i, j) + 1e-12;
        worst_z_exact = std::max(worst_z_exact, std::abs(mc.states[k](i, j).real() - exact.states[k](i, j).real()) / se);
        worst_z_vol = std::max(worst_z_vol, std::abs(mc.states[k](i, j).real() - vol.states[k](i, j).real()) / se);
      }
  CHECK(worst_z_exact < 4.5);
  CHECK(worst_z_vol > 5.0);
}

TEST_CASE("Monte Carlo is reproducible and thread-count independent") {
  const auto ens = ratebath::manifold_ensemble(1.0, 0.3, 0.6, 5);
  const auto m = flip_model(ens, Picture::interaction);
  const auto times = uniform_grid(3.0, 7);
  MCConfig cfg;
  cfg.trajectories = 5000;
  cfg.seed = 99;
  cfg.scheme = MCScheme::renewal;
  cfg.threads = 1;
  const auto one = mc_trajectories(m, plus_state(), times, cfg);
  cfg.threads = 4;
  const auto four = mc_trajectories(m, plus_state(), times, cfg);
  const auto again = mc_trajectories(m, plus_state(), times, cfg);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(one.states[k] == four.states[k]);
    CHECK(four.states[k] == again.states[k]);
    CHECK(one.stderr_re[k] == four.stderr_re[k]);
  }
  cfg.seed = 100;
  CHECK_FALSE(mc_trajectories(m, plus_state(), times, cfg).states.back() == one.states.back());

  cfg.trajectories = 1;
  const auto lone = mc_trajectories(m, plus_state(), times, cfg);
  CHECK(std::isnan(lone.stderr_re.back()(0, 1)));
}

TEST_CASE("Monte Carlo input validation") {
  const auto ens = ratebath::single_rate(1.0);
  ModelSpec bad{0.5 * qops::sigma_z(), {0.5 * qops::sigma_x()}, ens, Picture::schroedinger};
  const std::vector<double> times{0.0, 1.0};
  MCConfig cfg;
  cfg.trajectories = 10;
  CHECK_THROWS_AS(mc_trajectories(bad, plus_state(), times, cfg), qops::NormalizationError);
  const auto good = flip_model(ens);
  cfg.trajectories = 0;
  CHECK_THROWS(mc_trajectories(good, plus_state(), times, cfg));
  cfg.trajectories = 10;
  const std::vector<double> unsorted{1.0, 0.5};
  CHECK_THROWS(mc_trajectories(good, plus_state(), unsorted, cfg));
  Operator not_state = plus_state();
  not_state(0, 0) = 2.0;
  CHECK_THROWS(mc_trajectories(good, not_state, times, cfg));
}

TEST_CASE("non-locality witness separates Markovian from memory dynamics") {
  const auto times = uniform_grid(5.0, 501);
  auto witness = [&](const RateEnsemble& ens) {
    const auto m = dephasing_model(1.0, ens, Picture::schroedinger);
    const auto res = evolve_ensemble(m, plus_state(), times);
    return local_generator_residual(times, res.states, CompiledModel(m).hamiltonian_part());
  };
  const double markov = witness(ratebath::single_rate(1.0));
  const double memory = witness(ratebath::two_state_ensemble(0.5, 3.0, 0.3));
  CHECK(markov < 1e-3);
  CHECK(memory > 100.0 * markov);
}

TEST_CASE("grids") {
  const auto g = uniform_grid(2.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK(is_uniform(g));
  const std::vector<double> uneven{0.0, 1.0, 3.0};
  CHECK_FALSE(is_uniform(uneven));
}
