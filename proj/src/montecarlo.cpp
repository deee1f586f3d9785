#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "nmbath/dynamics.hpp"
#include "nmbath/rng.hpp"

namespace nmbath::dynamics {

std::string to_string(MCScheme scheme) {
  return scheme == MCScheme::frozen_rate ? "mc_frozen_rate" : "mc_renewal";
}

namespace {

using qops::Matrix;

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Per time point and matrix entry: sums of re, im, re^2, im^2.
class Accumulator {
 public:
  Accumulator() = default;
  Accumulator(std::size_t n_times, Index n_entries)
      : entries_(n_entries), data_(n_times * static_cast<std::size_t>(n_entries) * 4) {}

  void add(std::size_t k, const Matrix& state) {
    for (Index e = 0; e < entries_; ++e) {
      const Complex z = state.data()[e];
      Neumaier* slot = &data_[(k * static_cast<std::size_t>(entries_) + static_cast<std::size_t>(e)) * 4];
      slot[0].add(z.real());
      slot[1].add(z.imag());
      slot[2].add(z.real() * z.real());
      slot[3].add(z.imag() * z.imag());
    }
  }

  void merge(const Accumulator& other) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      data_[i].add(other.data_[i].sum);
      data_[i].add(other.data_[i].comp);
    }
  }

  double value(std::size_t k, Index e, int which) const {
    return data_[(k * static_cast<std::size_t>(entries_) + static_cast<std::size_t>(e)) * 4 +
                 static_cast<std::size_t>(which)]
        .value();
  }

 private:
  Index entries_ = 0;
  std::vector<Neumaier> data_;
};

unsigned worker_count(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NMBATH_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return std::max(1u, n);
}

class Unraveling {
 public:
  Unraveling(const CompiledModel& model, const Operator& rho0, std::span<const double> times,
             const MCConfig& config)
      : times_(times.begin(), times.end()),
        config_(config),
        interaction_(model.spec().picture == Picture::interaction) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (model.spec().hamiltonian +
                                                    model.spec().hamiltonian.adjoint()));
    energies_ = es.eigenvalues();
    basis_ = es.eigenvectors();
    rho0_ = basis_.adjoint() * rho0 * basis_;
    for (const auto& v : model.spec().jumps) kraus_.push_back(basis_.adjoint() * v * basis_);
    double cum = 0.0;
    for (const auto& e : model.spec().ensemble.entries()) {
      rates_.push_back(e.rate);
      cum += e.weight;
      cumulative_.push_back(cum);
    }
    cumulative_.back() = 1.0;
  }

  void run(std::size_t index, Accumulator& acc) const {
    CounterRng rng(config_.seed, index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_rate = [&] {
      const double u = unit(rng);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      return rates_[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          it - cumulative_.begin(), static_cast<std::ptrdiff_t>(rates_.size()) - 1))];
    };
    auto draw_wait = [&](double rate) {
      if (rate <= 0.0) return std::numeric_limits<double>::infinity();
      return std::exponential_distribution<double>(rate)(rng);
    };
    const bool frozen = config_.scheme == MCScheme::frozen_rate;
    const double frozen_rate = frozen ? draw_rate() : 0.0;
    auto next_wait = [&] { return draw_wait(frozen ? frozen_rate : draw_rate()); };

    Matrix rho = rho0_;
    double t_last = 0.0;
    double next_event = next_wait();
    for (std::size_t k = 0; k < times_.size(); ++k) {
      while (next_event <= times_[k]) {
        rotate(rho, next_event - t_last);
        rho = apply_jump(rho);
        t_last = next_event;
        next_event += next_wait();
      }
      Matrix x = rho;
      rotate(x, (interaction_ ? 0.0 : times_[k]) - t_last);
      acc.add(k, basis_ * x * basis_.adjoint());
    }
  }

 private:
  // Free evolution for time s in the energy eigenbasis (s may be negative).
  void rotate(Matrix& rho, double s) const {
    if (s == 0.0) return;
    for (Index j = 0; j < rho.cols(); ++j)
      for (Index i = 0; i < rho.rows(); ++i)
        rho(i, j) *= std::exp(Complex(0.0, -(energies_(i) - energies_(j)) * s));
  }

  Matrix apply_jump(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& v : kraus_) out += v * rho * v.adjoint();
    return out;
  }

  std::vector<double> times_;
  MCConfig config_;
  bool interaction_;
  Eigen::VectorXd energies_;
  Matrix basis_;
  Matrix rho0_;
  std::vector<Matrix> kraus_;
  std::vector<double> rates_;
  std::vector<double> cumulative_;
};

}  // namespace

EvolutionResult mc_trajectories(const ModelSpec& model, const Operator& rho0,
                                std::span<const double> times, const MCConfig& config) {
  qops::validate_density_matrix(rho0);
  if (config.trajectories < 1) throw std::invalid_argument("mc_trajectories: need >= 1 trajectory");
  // Rejects L != E - I.
  (void)qops::jump_superoperator(model.jumps);
  for (std::size_t k = 1; k < times.size(); ++k)
    if (times[k] < times[k - 1]) throw std::invalid_argument("mc_trajectories: times must be sorted");

  const CompiledModel compiled(model);
  const Unraveling unraveling(compiled, rho0, times, config);
  const Index d = compiled.dim();
  const Index n_entries = d * d;

  // Block layout depends only on the trajectory count, so the merged sums
  // are identical for any number of worker threads.
  const std::size_t n = config.trajectories;
  const std::size_t block = std::max<std::size_t>(256, (n + 63) / 64);
  const std::size_t n_blocks = (n + block - 1) / block;
  std::vector<Accumulator> partial(n_blocks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < n_blocks; b = next++) {
      Accumulator acc(times.size(), n_entries);
      const std::size_t end = std::min(n, (b + 1) * block);
      for (std::size_t i = b * block; i < end; ++i) unraveling.run(i, acc);
      partial[b] = std::move(acc);
    }
  };
  const unsigned n_workers = std::min<unsigned>(worker_count(config.threads),
                                                static_cast<unsigned>(n_blocks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  Accumulator total(times.size(), n_entries);
  for (const auto& p : partial) total.merge(p);

  EvolutionResult result;
  result.solver = to_string(config.scheme);
  result.times.assign(times.begin(), times.end());
  result.trajectories = n;
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    Operator mean(d, d);
    Eigen::MatrixXd se_re(d, d), se_im(d, d);
    for (Index e = 0; e < n_entries; ++e) {
      const double m_re = total.value(k, e, 0) / nd;
      const double m_im = total.value(k, e, 1) / nd;
      mean.data()[e] = Complex(m_re, m_im);
      if (n < 2) {
        se_re.data()[e] = std::numeric_limits<double>::quiet_NaN();
        se_im.data()[e] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double var_re = (total.value(k, e, 2) - nd * m_re * m_re) / (nd - 1.0);
      const double var_im = (total.value(k, e, 3) - nd * m_im * m_im) / (nd - 1.0);
      se_re.data()[e] = std::sqrt(std::max(var_re, 0.0) / nd);
      se_im.data()[e] = std::sqrt(std::max(var_im, 0.0) / nd);
    }
    result.states.push_back(std::move(mean));
    result.stderr_re.push_back(std::move(se_re));
    result.stderr_im.push_back(std::move(se_im));
  }
  compute_diagnostics(result);
  return result;
}

}  // namespace nmbath::dynamics
