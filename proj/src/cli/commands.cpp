#include "nmbath/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nmbath/cli/output.hpp"
#include "nmbath/fractional.hpp"
#include "nmbath/powerlaw.hpp"
#include "nmbath/qrt.hpp"
#include "nmbath/talbot.hpp"

namespace nmbath::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using qops::Complex;
using qops::Index;

namespace {

constexpr double kCpTolerance = 1e-8;
constexpr double kAsymptoticRatio = 1e-6;

// 20 / <gamma>, the default horizon.
double horizon(const RunConfig& cfg) {
  const double mean = cfg.ensemble.type == "fractional" ? build_fractional(cfg).mean_rate
                                                        : ratebath::stats(build_ensemble(cfg)).mean_rate;
  return mean > 0.0 ? 20.0 / mean : 20.0;
}

std::vector<double> time_grid(const RunConfig& cfg) {
  const double t_max = cfg.grid.t_max > 0.0 ? cfg.grid.t_max : horizon(cfg);
  return dynamics::uniform_grid(t_max, static_cast<std::size_t>(cfg.grid.steps) + 1);
}

std::vector<double> tau_grid(const RunConfig& cfg) {
  const double tau_max = cfg.grid.tau_max > 0.0 ? cfg.grid.tau_max : horizon(cfg);
  return dynamics::uniform_grid(tau_max, static_cast<std::size_t>(cfg.grid.tau_steps) + 1);
}

fs::path out_path(const RunConfig& cfg, const std::string& name) { return fs::path(cfg.output.dir) / name; }

void emit(const RunConfig& cfg, const std::string& name, const CsvTable& table, std::ostream& log) {
  if (!cfg.writes("csv")) return;
  write_csv(out_path(cfg, name), table);
  log << "wrote " << out_path(cfg, name).string() << "\n";
}

void emit(const RunConfig& cfg, const std::string& name, const json& doc, std::ostream& log) {
  if (!cfg.writes("json")) return;
  write_json(out_path(cfg, name), doc);
  log << "wrote " << out_path(cfg, name).string() << "\n";
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> t(static_cast<std::size_t>(points));
  const double ratio = std::log(hi / lo);
  for (int k = 0; k < points; ++k) t[static_cast<std::size_t>(k)] = lo * std::exp(ratio * k / (points - 1));
  t.front() = lo;
  t.back() = hi;
  return t;
}

std::vector<double> unwrap(const std::vector<std::optional<double>>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.value_or(std::nan("")));
  return out;
}

std::string entry_name(Index i, Index j) { return "rho_" + std::to_string(i) + std::to_string(j); }

// ---------------------------------------------------------------- kernel

void kernel_discrete(const RunConfig& cfg, std::ostream& log) {
  const auto ens = build_ensemble(cfg);
  const auto st = ratebath::stats(ens);
  const auto dec = ratebath::kernel_decompose(ens);
  const auto t = time_grid(cfg);

  CsvTable table({"t", "w", "P0", "f", "K_reg"});
  for (double x : t)
    table.add_row({x, ratebath::waiting_density(ens, x), ratebath::survival(ens, x), dec.sprinkling(x), dec.regular(x)});
  emit(cfg, "kernel_series.csv", table, log);

  json modes = json::array();
  for (const auto& m : dec.modes) modes.push_back({{"pole", m.pole}, {"amplitude", m.amplitude}});
  const double inv_tau = 1.0 / st.mean_waiting_time;
  json checks = {
      {"sprinkling_at_zero", dec.sprinkling(0.0)},
      {"sprinkling_at_zero_expected", st.mean_rate},
      {"sprinkling_at_t_max", dec.sprinkling(t.back())},
      {"sprinkling_limit", dec.sprinkling_limit()},
      {"sprinkling_limit_expected", inv_tau},
  };
  if (st.eta) checks["eta_beta_identity_residual"] = *st.eta * (1.0 - inv_tau / st.mean_rate) - st.beta;
  json doc = {
      {"command", "kernel"},
      {"ensemble", {{"type", cfg.ensemble.type}, {"size", ens.size()}}},
      {"mean_rate", st.mean_rate},
      {"mean_waiting_time", json_number(st.mean_waiting_time)},
      {"second_moment", st.second_moment},
      {"beta", st.beta},
      {"eta", st.eta ? json(*st.eta) : json(nullptr)},
      {"alpha", st.alpha ? json(*st.alpha) : json(nullptr)},
      {"markov_weight", dec.markov_weight},
      {"modes", modes},
      {"checks", checks},
  };
  emit(cfg, "kernel_summary.json", doc, log);
}

void kernel_fractional(const RunConfig& cfg, std::ostream& log) {
  const auto model = build_fractional(cfg);
  const auto t = time_grid(cfg);
  // w, P0 and K have their rightmost singularity at the branch point
  // -gamma_c; f also has the pole at u = 0.
  ratebath::TalbotOptions shifted;
  shifted.shift = -model.cutoff;
  const auto w = unwrap(ratebath::talbot_invert([&](Complex u) { return model.waiting(u); }, t, shifted));
  const auto p0 = unwrap(ratebath::talbot_invert([&](Complex u) { return model.survival(u); }, t, shifted));
  const auto kreg = unwrap(ratebath::talbot_invert(
      [&](Complex u) { return model.kernel(u) - model.mean_rate; }, t, shifted));
  const auto f = unwrap(ratebath::talbot_invert([&](Complex u) { return model.sprinkling(u); }, t));

  CsvTable table({"t", "w", "P0", "f", "K_reg"});
  for (std::size_t k = 0; k < t.size(); ++k) table.add_row({t[k], w[k], p0[k], f[k], kreg[k]});
  emit(cfg, "kernel_series.csv", table, log);

  json doc = {
      {"command", "kernel"},
      {"ensemble", {{"type", "fractional"}}},
      {"mean_rate", model.mean_rate},
      {"mean_waiting_time", json_number(cfg.ensemble.mean_waiting_time)},
      {"beta", model.beta},
      {"alpha", model.alpha},
      {"cutoff", model.cutoff},
      {"amplitude", model.amplitude},
      {"markov_weight", model.mean_rate},
  };
  emit(cfg, "kernel_summary.json", doc, log);
}

// ---------------------------------------------------------------- evolve

dynamics::EvolutionResult run_solver(const std::string& name, const dynamics::ModelSpec& model,
                                     const qops::Operator& rho0, const std::vector<double>& t,
                                     const RunConfig& cfg) {
  if (name == "ensemble") return dynamics::evolve_ensemble(model, rho0, t);
  if (name == "volterra") {
    dynamics::VolterraOptions opt;
    opt.max_step = cfg.solver.max_step;
    return dynamics::evolve_volterra(model, rho0, t, ratebath::kernel_decompose(model.ensemble), opt);
  }
  dynamics::MCConfig mc;
  mc.trajectories = cfg.solver.trajectories;
  mc.seed = cfg.solver.seed;
  mc.threads = cfg.solver.threads;
  mc.scheme = name == "mc_frozen_rate" ? dynamics::MCScheme::frozen_rate : dynamics::MCScheme::renewal;
  return dynamics::mc_trajectories(model, rho0, t, mc);
}

CsvTable evolution_table(const dynamics::EvolutionResult& r, Index d) {
  const bool mc = !r.stderr_re.empty();
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      header.push_back(entry_name(i, j) + "_re");
      header.push_back(entry_name(i, j) + "_im");
    }
  if (d == 2) header.insert(header.end(), {"bloch_x", "bloch_y", "bloch_z"});
  header.insert(header.end(), {"trace_drift", "min_eigenvalue"});
  if (mc)
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        header.push_back(entry_name(i, j) + "_re_se");
        header.push_back(entry_name(i, j) + "_im_se");
      }

  CsvTable table(header);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const auto& rho = r.states[k];
    std::vector<double> row{r.times[k]};
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        row.push_back(rho(i, j).real());
        row.push_back(rho(i, j).imag());
      }
    if (d == 2) {
      row.push_back((qops::sigma_x() * rho).trace().real());
      row.push_back((qops::sigma_y() * rho).trace().real());
      row.push_back((qops::sigma_z() * rho).trace().real());
    }
    row.push_back(r.trace_drift[k]);
    row.push_back(r.min_eigenvalue[k]);
    if (mc)
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
          row.push_back(r.stderr_re[k](i, j));
          row.push_back(r.stderr_im[k](i, j));
        }
    table.add_row(row);
  }
  return table;
}

json compare(const dynamics::EvolutionResult& a, const dynamics::EvolutionResult& b) {
  double max_diff = 0.0;
  double max_z = 0.0;
  bool within = true;
  const bool stochastic = !a.stderr_re.empty() || !b.stderr_re.empty();
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const auto diff = (a.states[k] - b.states[k]).eval();
    max_diff = std::max(max_diff, diff.cwiseAbs().maxCoeff());
    if (!stochastic) continue;
    for (Index e = 0; e < diff.size(); ++e) {
      double var_re = 0.0;
      double var_im = 0.0;
      for (const auto* r : {&a, &b}) {
        if (r->stderr_re.empty()) continue;
        var_re += std::pow(r->stderr_re[k].data()[e], 2);
        var_im += std::pow(r->stderr_im[k].data()[e], 2);
      }
      const double d_re = std::abs(diff.data()[e].real());
      const double d_im = std::abs(diff.data()[e].imag());
      if (d_re > 3.0 * std::sqrt(var_re) + 1e-12 || d_im > 3.0 * std::sqrt(var_im) + 1e-12) within = false;
      if (var_re > 0.0) max_z = std::max(max_z, d_re / std::sqrt(var_re));
      if (var_im > 0.0) max_z = std::max(max_z, d_im / std::sqrt(var_im));
    }
  }
  json out = {{"a", a.solver}, {"b", b.solver}, {"max_abs_difference", max_diff}};
  if (stochastic) {
    out["max_z_score"] = max_z;
    out["within_3_sigma"] = within;
  }
  return out;
}

// ---------------------------------------------------------------- correlate

std::pair<qrt::ObservableBasis, std::vector<std::string>> basis_for(Index d) {
  if (d == 2) return {qrt::pauli_basis(), {"sigma_x", "sigma_y", "sigma_z", "identity"}};
  std::vector<qops::Operator> ops;
  std::vector<std::string> names;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      qops::Operator e = qops::Operator::Zero(d, d);
      e(i, j) = 1.0;
      ops.push_back(e);
      names.push_back("e_" + std::to_string(i) + std::to_string(j));
    }
  return {qrt::ObservableBasis(std::move(ops)), names};
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "kernel") return Command::kernel;
  if (name == "evolve") return Command::evolve;
  if (name == "correlate") return Command::correlate;
  if (name == "cpcheck") return Command::cpcheck;
  if (name == "fitpow") return Command::fitpow;
  return std::nullopt;
}

std::string to_string(Command cmd) {
  switch (cmd) {
    case Command::kernel: return "kernel";
    case Command::evolve: return "evolve";
    case Command::correlate: return "correlate";
    case Command::cpcheck: return "cpcheck";
    case Command::fitpow: return "fitpow";
  }
  return "unknown";
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out_dir) cfg.output.dir = *o.out_dir;
  if (o.seed) cfg.solver.seed = *o.seed;
  if (o.trajectories) {
    if (*o.trajectories < 1) throw ConfigError("--trajectories must be >= 1", 0, "solver.trajectories");
    cfg.solver.trajectories = *o.trajectories;
  }
}

void cmd_kernel(const RunConfig& cfg, std::ostream& log) {
  if (cfg.ensemble.type == "fractional") kernel_fractional(cfg, log);
  else kernel_discrete(cfg, log);
}

void cmd_evolve(const RunConfig& cfg, std::ostream& log) {
  const auto model = build_model(cfg);
  const Index d = model.hamiltonian.rows();
  const auto rho0 = build_initial_state(cfg, d);
  if (cfg.solver.list.empty()) {
    log << "warning: solver.list is empty, nothing to evolve\n";
    return;
  }
  const auto t = time_grid(cfg);
  std::vector<dynamics::EvolutionResult> results;
  for (const auto& name : cfg.solver.list) {
    log << "running " << name << "\n";
    results.push_back(run_solver(name, model, rho0, t, cfg));
    emit(cfg, "evolve_" + name + ".csv", evolution_table(results.back(), d), log);
  }

  json solvers = json::array();
  for (const auto& r : results) {
    json s = {{"solver", r.solver},
              {"max_trace_drift", *std::max_element(r.trace_drift.begin(), r.trace_drift.end())},
              {"min_eigenvalue", *std::min_element(r.min_eigenvalue.begin(), r.min_eigenvalue.end())}};
    if (r.step_error_estimate) s["step_error_estimate"] = *r.step_error_estimate;
    if (r.trajectories > 0) s["trajectories"] = r.trajectories;
    solvers.push_back(s);
  }
  json residuals = json::array();
  for (std::size_t a = 0; a < results.size(); ++a)
    for (std::size_t b = a + 1; b < results.size(); ++b) residuals.push_back(compare(results[a], results[b]));
  json doc = {{"command", "evolve"},
              {"picture", cfg.model.picture},
              {"points", t.size()},
              {"seed", cfg.solver.seed},
              {"solvers", solvers},
              {"cross_residuals", residuals}};
  emit(cfg, "evolve_summary.json", doc, log);
}

void cmd_correlate(const RunConfig& cfg, std::ostream& log) {
  const auto model = build_model(cfg);
  const Index d = model.hamiltonian.rows();
  const auto rho0 = build_initial_state(cfg, d);
  const auto s = build_observable(cfg, d);
  const auto [basis, names] = basis_for(d);
  const auto t = time_grid(cfg);
  const auto tau = tau_grid(cfg);
  const auto surf = qrt::qrt_residual(model, rho0, s, basis, t, tau);

  std::vector<std::string> header{"t", "tau"};
  for (const auto& n : names)
    for (const char* part : {"actual", "predicted", "residual"}) {
      header.push_back(n + "_" + part + "_re");
      header.push_back(n + "_" + part + "_im");
    }
  CsvTable table(header);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < tau.size(); ++j) {
      std::vector<double> row{t[i], tau[j]};
      for (std::size_t mu = 0; mu < names.size(); ++mu)
        for (const auto* v : {&surf.actual, &surf.predicted, &surf.residual}) {
          const Complex z = (*v)[i][j](static_cast<Index>(mu));
          row.push_back(z.real());
          row.push_back(z.imag());
        }
      table.add_row(row);
    }
  emit(cfg, "correlate_surface.csv", table, log);

  json by_t = json::array();
  for (std::size_t i = 0; i < t.size(); ++i) by_t.push_back({{"t", t[i]}, {"max_abs_residual", surf.max_residual(i)}});

  // Envelope scale: the size of Tr{A [rho0 - rho_inf] S}, which bounds the
  // residual through the survival-function correlation.
  std::optional<double> scale;
  try {
    scale = qrt::inhomogeneity_amplitude(model, rho0, s, basis).cwiseAbs().maxCoeff();
  } catch (const std::runtime_error& err) {
    log << "warning: no stationary state: " << err.what() << "\n";
  }
  const double last = surf.max_residual(t.size() - 1);
  json doc = {{"command", "correlate"},
              {"picture", cfg.model.picture},
              {"observable", cfg.correlate.observable},
              {"basis", names},
              {"max_residual_by_t", by_t},
              {"inhomogeneity_scale", scale ? json(*scale) : json(nullptr)},
              {"envelope_first", surf.max_residual(0)},
              {"envelope_last", last}};
  if (scale) {
    const bool valid = *scale > 0.0 ? last <= kAsymptoticRatio * *scale : last <= 1e-10;
    doc["relative_envelope_last"] = *scale > 0.0 ? json(last / *scale) : json(nullptr);
    doc["asymptotically_valid"] = valid;
  } else {
    doc["relative_envelope_last"] = nullptr;
    doc["asymptotically_valid"] = nullptr;
  }
  if (cfg.model.preset == "dephasing" && model.picture == dynamics::Picture::interaction) {
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < tau.size(); ++j)
        worst = std::max(worst, (surf.residual[i][j] - qrt::dephasing_residual(model.ensemble, rho0, s, t[i], tau[j]))
                                    .cwiseAbs()
                                    .maxCoeff());
    doc["dephasing_closed_form_max_deviation"] = worst;
  } else {
    doc["dephasing_closed_form_max_deviation"] = nullptr;
  }
  emit(cfg, "correlate_summary.json", doc, log);
}

void cmd_cpcheck(const RunConfig& cfg, std::ostream& log) {
  const auto model = build_model(cfg);
  const dynamics::CompiledModel compiled(model);
  const Index d = compiled.dim();
  const auto t = time_grid(cfg);
  json solvers = json::array();
  for (const auto& name : cfg.solver.list) {
    std::function<std::vector<qops::Operator>(const qops::Operator&)> evolve;
    if (name == "ensemble") {
      evolve = [&](const qops::Operator& op) { return dynamics::ensemble_series(compiled, op, t); };
    } else if (name == "volterra") {
      const auto kernel = ratebath::kernel_decompose(model.ensemble);
      dynamics::VolterraOptions opt;
      opt.max_step = cfg.solver.max_step;
      evolve = [&compiled, &t, kernel, opt](const qops::Operator& op) {
        return dynamics::volterra_series(compiled, op, t, kernel, opt);
      };
    } else {
      log << "warning: cpcheck skips stochastic solver " << name << "\n";
      continue;
    }
    log << "running " << name << "\n";
    const auto maps = dynamics::reconstruct_maps(d, t.size(), evolve);
    std::vector<std::string> header{"t", "min_eigenvalue"};
    for (Index k = 0; k < d * d; ++k) header.push_back("choi_" + std::to_string(k));
    CsvTable table(header);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Eigen::VectorXd spec = qops::choi_spectrum(maps[k]);
      std::vector<double> row{t[k], spec(0)};
      for (Index e = 0; e < spec.size(); ++e) row.push_back(spec(e));
      table.add_row(row);
      worst = std::min(worst, spec(0));
    }
    emit(cfg, "cpcheck_" + name + ".csv", table, log);
    solvers.push_back({{"solver", name}, {"min_choi_eigenvalue", worst}, {"completely_positive", worst >= -kCpTolerance}});
  }
  if (solvers.empty()) log << "warning: no deterministic solver selected, nothing to check\n";
  json doc = {{"command", "cpcheck"}, {"tolerance", kCpTolerance}, {"points", t.size()}, {"solvers", solvers}};
  emit(cfg, "cpcheck_summary.json", doc, log);
}

void cmd_fitpow(const RunConfig& cfg, std::ostream& log) {
  const bool fractional = cfg.ensemble.type == "fractional";
  double t_lo = cfg.fitpow.t_lo;
  double t_hi = cfg.fitpow.t_hi;
  const bool default_window = t_lo == 0.0 && t_hi == 0.0;
  std::function<std::vector<double>(const std::vector<double>&)> density;
  if (fractional) {
    const auto model = build_fractional(cfg);
    if (default_window) t_lo = 5.0 / model.mean_rate;
    ratebath::TalbotOptions opt;
    opt.shift = -model.cutoff;
    density = [model, opt](const std::vector<double>& t) {
      return unwrap(ratebath::talbot_invert([&](Complex u) { return model.waiting(u); }, t, opt));
    };
  } else {
    const auto ens = build_ensemble(cfg);
    if (default_window) t_lo = 5.0 / ens.fastest_rate();
    density = [ens](const std::vector<double>& t) {
      std::vector<double> w;
      for (double x : t) w.push_back(ratebath::waiting_density(ens, x));
      return w;
    };
  }
  if (default_window) t_hi = 100.0 * t_lo;

  auto t = log_grid(t_lo, t_hi, cfg.fitpow.points);
  auto w = density(t);
  // Drop the tail where the density underflows or the inversion failed.
  std::size_t keep = 0;
  while (keep < w.size() && std::isfinite(w[keep]) && w[keep] > 0.0) ++keep;
  const bool clipped = keep < w.size();
  t.resize(keep);
  w.resize(keep);
  if (clipped) log << "warning: density not positive beyond t = " << (keep > 0 ? t.back() : t_lo) << "\n";

  CsvTable table({"t", "w"});
  for (std::size_t k = 0; k < t.size(); ++k) table.add_row({t[k], w[k]});
  emit(cfg, "fitpow_series.csv", table, log);

  const auto fit = ratebath::fit_power_law(t, w, t_lo, t_hi);
  json doc = {{"command", "fitpow"},
              {"slope", fit.slope},
              {"exponent", -fit.slope},
              {"intercept", fit.intercept},
              {"r_squared", fit.r_squared},
              {"points", fit.points},
              {"window", {{"t_lo", t_lo}, {"t_hi", t_hi}, {"default", default_window}, {"clipped", clipped}}},
              {"rejected", fit.rejected},
              {"min_r_squared", ratebath::kPowerLawMinRSquared}};
  emit(cfg, "fitpow_summary.json", doc, log);
}

int run(Command cmd, const std::string& config_path, const Overrides& overrides, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_overrides(cfg, overrides);
  } catch (const ConfigError& err) {
    log << "config error: " << err.what() << "\n";
    return kExitConfig;
  }
  try {
    const std::string normalized = normalized_config(cfg);
    if (!(parse_config(normalized, "normalized config") == cfg))
      throw std::logic_error("normalized config does not reproduce the run plan");
    write_text(out_path(cfg, "config.normalized.txt"), normalized);
    switch (cmd) {
      case Command::kernel: cmd_kernel(cfg, log); break;
      case Command::evolve: cmd_evolve(cfg, log); break;
      case Command::correlate: cmd_correlate(cfg, log); break;
      case Command::cpcheck: cmd_cpcheck(cfg, log); break;
      case Command::fitpow: cmd_fitpow(cfg, log); break;
    }
  } catch (const ConfigError& err) {
    log << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    log << "solver error: " << err.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace nmbath::cli
