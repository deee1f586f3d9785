#include "nmbath/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nmbath::cli {

namespace {

using qops::Complex;
using qops::Index;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool same_operator(const Operator& a, const Operator& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (content.empty()) continue;
      const auto eq = content.find('=');
      if (eq == std::string::npos) fail("expected `section.key = value`", line, content);
      const std::string key = trim(content.substr(0, eq));
      if (key.empty() || key.find('.') == std::string::npos || key.find(' ') != std::string::npos)
        fail("malformed key `" + key + "`, expected section.key", line, key);
      if (entries_.count(key) != 0)
        fail("duplicate key (first set on line " + std::to_string(entries_[key].line) + ")", line, key);
      entries_[key] = {trim(content.substr(eq + 1)), line};
    }
  }

  [[noreturn]] void fail(const std::string& msg, int line, const std::string& field) const {
    std::ostringstream os;
    os << source_;
    if (line > 0) os << ":" << line;
    os << ": " << field << ": " << msg;
    throw ConfigError(os.str(), line, field);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const Entry* find(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const Entry* e = find(key);
    return e != nullptr ? e->value : fallback;
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> allowed) {
    const Entry* e = find(key);
    if (e == nullptr) return fallback;
    for (const char* a : allowed)
      if (e->value == a) return e->value;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail("`" + e->value + "` is not one of {" + list + "}", e->line, key);
  }

  double number(const std::string& key, double fallback, bool allow_inf = false) {
    const Entry* e = find(key);
    if (e == nullptr) return fallback;
    return parse_double(e->value, e->line, key, allow_inf);
  }

  long long integer(const std::string& key, long long fallback, long long lo) {
    const Entry* e = find(key);
    if (e == nullptr) return fallback;
    long long v = 0;
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("`" + e->value + "` is not an integer", e->line, key);
    if (v < lo) fail("must be >= " + std::to_string(lo), e->line, key);
    return v;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    const Entry* e = find(key);
    if (e == nullptr) return fallback;
    std::uint64_t v = 0;
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("`" + e->value + "` is not an unsigned 64-bit integer", e->line, key);
    return v;
  }

  std::vector<double> numbers(const std::string& key) {
    const Entry* e = find(key);
    if (e == nullptr) fail("required key is missing", 0, key);
    std::vector<double> out;
    for (const auto& item : split(e->value, ',')) out.push_back(parse_double(item, e->line, key, false));
    return out;
  }

  std::vector<std::string> words(const std::string& key, std::vector<std::string> fallback,
                                 std::initializer_list<const char*> allowed) {
    const Entry* e = find(key);
    if (e == nullptr) return fallback;
    std::vector<std::string> out;
    if (e->value.empty()) return out;
    for (const auto& item : split(e->value, ',')) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item == a; }))
        fail("unknown entry `" + item + "`", e->line, key);
      if (std::find(out.begin(), out.end(), item) != out.end()) fail("repeated entry `" + item + "`", e->line, key);
      out.push_back(item);
    }
    return out;
  }

  /// `<prefix>.re` (required) and `<prefix>.im` (optional), rows split by `;`.
  Operator matrix(const std::string& prefix) {
    const Entry* re = find(prefix + ".re");
    if (re == nullptr) fail("required key is missing", 0, prefix + ".re");
    Operator m = parse_real_matrix(re->value, re->line, prefix + ".re").cast<Complex>();
    if (const Entry* im = find(prefix + ".im")) {
      const Eigen::MatrixXd i = parse_real_matrix(im->value, im->line, prefix + ".im");
      if (i.rows() != m.rows() || i.cols() != m.cols()) fail("shape differs from the .re part", im->line, prefix + ".im");
      m += Complex(0.0, 1.0) * i.cast<Complex>();
    }
    if (m.rows() != m.cols()) fail("matrix must be square", re->line, prefix + ".re");
    return m;
  }

  void check_all_used() const {
    for (const auto& [key, e] : entries_)
      if (used_.count(key) == 0) fail("unknown key, or not used with the selected options", e.line, key);
  }

  int line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

 private:
  double parse_double(std::string s, int line, const std::string& key, bool allow_inf) const {
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) fail("`" + s + "` is not a number", line, key);
    if (std::isnan(v) || (!allow_inf && std::isinf(v))) fail("value must be finite", line, key);
    return v;
  }

  Eigen::MatrixXd parse_real_matrix(const std::string& text, int line, const std::string& key) const {
    std::vector<std::vector<double>> rows;
    for (const auto& row : split(text, ';')) {
      std::vector<double> r;
      std::istringstream is(row);
      std::string tok;
      while (is >> tok) {
        for (auto& piece : split(tok, ','))
          if (!piece.empty()) r.push_back(parse_double(piece, line, key, false));
      }
      if (r.empty()) fail("empty matrix row", line, key);
      rows.push_back(std::move(r));
    }
    if (rows.empty()) fail("empty matrix", line, key);
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) fail("ragged matrix rows", line, key);
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

std::string matrix_text(const Eigen::MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    if (i > 0) out += "; ";
    for (Index j = 0; j < m.cols(); ++j) out += (j > 0 ? " " : "") + fmt(m(i, j));
  }
  return out;
}

void emit_matrix(std::ostream& os, const std::string& prefix, const Operator& m) {
  os << prefix << ".re = " << matrix_text(m.real()) << "\n";
  if (!m.imag().isZero(0.0)) os << prefix << ".im = " << matrix_text(m.imag()) << "\n";
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

[[noreturn]] void semantic(const std::string& msg, const std::string& field) {
  throw ConfigError(field + ": " + msg, 0, field);
}

}  // namespace

bool RunConfig::writes(const std::string& format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  const auto& ma = a.model;
  const auto& mb = b.model;
  bool same = ma.preset == mb.preset && ma.omega == mb.omega && ma.picture == mb.picture &&
              same_operator(ma.hamiltonian, mb.hamiltonian) && ma.jumps.size() == mb.jumps.size();
  for (std::size_t k = 0; same && k < ma.jumps.size(); ++k) same = same_operator(ma.jumps[k], mb.jumps[k]);
  const auto& ea = a.ensemble;
  const auto& eb = b.ensemble;
  same = same && ea.type == eb.type && ea.rate == eb.rate && ea.rates == eb.rates && ea.weights == eb.weights &&
         ea.p_up == eb.p_up && ea.gamma_up == eb.gamma_up && ea.gamma_down == eb.gamma_down &&
         ea.gamma == eb.gamma && ea.a == eb.a && ea.b == eb.b && ea.n == eb.n && ea.alpha == eb.alpha &&
         ea.mean_rate == eb.mean_rate && ea.beta == eb.beta && ea.mean_waiting_time == eb.mean_waiting_time;
  same = same && a.initial.state == b.initial.state && same_operator(a.initial.matrix, b.initial.matrix);
  same = same && a.grid.t_max == b.grid.t_max && a.grid.steps == b.grid.steps && a.grid.tau_max == b.grid.tau_max &&
         a.grid.tau_steps == b.grid.tau_steps;
  same = same && a.solver.list == b.solver.list && a.solver.trajectories == b.solver.trajectories &&
         a.solver.seed == b.solver.seed && a.solver.threads == b.solver.threads &&
         a.solver.max_step == b.solver.max_step;
  same = same && a.correlate.observable == b.correlate.observable &&
         same_operator(a.correlate.matrix, b.correlate.matrix);
  same = same && a.fitpow.t_lo == b.fitpow.t_lo && a.fitpow.t_hi == b.fitpow.t_hi && a.fitpow.points == b.fitpow.points;
  return same && a.output.dir == b.output.dir && a.output.formats == b.output.formats;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  Reader r(text, source);
  RunConfig cfg;

  auto& m = cfg.model;
  m.preset = r.choice("model.preset", m.preset, {"dephasing", "custom"});
  m.picture = r.choice("model.picture", m.picture, {"interaction", "schroedinger"});
  if (m.preset == "dephasing") {
    m.omega = r.number("model.omega", m.omega);
  } else {
    m.hamiltonian = r.matrix("model.hamiltonian");
    const auto count = r.integer("model.jumps", 0, 0);
    for (long long k = 1; k <= count; ++k) {
      const std::string prefix = "model.jump." + std::to_string(k);
      m.jumps.push_back(r.matrix(prefix));
      if (m.jumps.back().rows() != m.hamiltonian.rows())
        r.fail("jump operator dimension differs from the Hamiltonian", r.line_of(prefix + ".re"), prefix + ".re");
    }
  }

  auto& e = cfg.ensemble;
  e.type = r.choice("ensemble.type", e.type, {"single", "custom", "two_state", "manifold", "fractional"});
  if (e.type == "single") {
    e.rate = r.number("ensemble.rate", e.rate);
  } else if (e.type == "custom") {
    e.rates = r.numbers("ensemble.rates");
    e.weights = r.numbers("ensemble.weights");
    if (e.rates.size() != e.weights.size())
      r.fail("needs as many weights as rates", r.line_of("ensemble.weights"), "ensemble.weights");
  } else if (e.type == "two_state") {
    e.p_up = r.number("ensemble.p_up", e.p_up);
    e.gamma_up = r.number("ensemble.gamma_up", e.gamma_up);
    e.gamma_down = r.number("ensemble.gamma_down", e.gamma_down);
  } else if (e.type == "manifold") {
    e.gamma = r.number("ensemble.gamma", e.gamma);
    e.a = r.number("ensemble.a", e.a);
    e.b = r.number("ensemble.b", e.b);
    e.n = static_cast<int>(r.integer("ensemble.n", e.n, 1));
  } else {
    e.alpha = r.number("ensemble.alpha", e.alpha);
    e.mean_rate = r.number("ensemble.mean_rate", e.mean_rate);
    e.beta = r.number("ensemble.beta", e.beta);
    e.mean_waiting_time = r.number("ensemble.mean_waiting_time", e.mean_waiting_time, true);
  }

  cfg.initial.state = r.choice("initial.state", cfg.initial.state, {"plus", "minus", "up", "down", "mixed", "custom"});
  if (cfg.initial.state == "custom") cfg.initial.matrix = r.matrix("initial");

  auto& g = cfg.grid;
  g.t_max = r.number("grid.t_max", g.t_max);
  g.steps = static_cast<int>(r.integer("grid.steps", g.steps, 1));
  g.tau_max = r.number("grid.tau_max", g.tau_max);
  g.tau_steps = static_cast<int>(r.integer("grid.tau_steps", g.tau_steps, 1));
  if (!(g.t_max >= 0.0)) r.fail("must be >= 0", r.line_of("grid.t_max"), "grid.t_max");
  if (!(g.tau_max >= 0.0)) r.fail("must be >= 0", r.line_of("grid.tau_max"), "grid.tau_max");

  auto& s = cfg.solver;
  s.list = r.words("solver.list", s.list, {"ensemble", "volterra", "mc_frozen_rate", "mc_renewal"});
  s.trajectories = static_cast<std::size_t>(r.integer("solver.trajectories", static_cast<long long>(s.trajectories), 1));
  s.seed = r.unsigned64("solver.seed", s.seed);
  s.threads = static_cast<unsigned>(r.integer("solver.threads", s.threads, 0));
  s.max_step = r.number("solver.max_step", s.max_step);
  if (!(s.max_step > 0.0)) r.fail("must be > 0", r.line_of("solver.max_step"), "solver.max_step");

  cfg.correlate.observable = r.choice("correlate.observable", cfg.correlate.observable,
                                      {"identity", "sigma_x", "sigma_y", "sigma_z", "sigma_minus", "sigma_plus", "custom"});
  if (cfg.correlate.observable == "custom") cfg.correlate.matrix = r.matrix("correlate");

  auto& f = cfg.fitpow;
  f.t_lo = r.number("fitpow.t_lo", f.t_lo);
  f.t_hi = r.number("fitpow.t_hi", f.t_hi);
  f.points = static_cast<int>(r.integer("fitpow.points", f.points, ratebath::kPowerLawMinPoints));
  const bool default_window = f.t_lo == 0.0 && f.t_hi == 0.0;
  if (!default_window && !(f.t_lo > 0.0 && f.t_hi > f.t_lo))
    r.fail("window needs 0 < t_lo < t_hi (or both 0 for the default)", r.line_of("fitpow.t_hi"), "fitpow.t_hi");

  cfg.output.dir = r.text("output.dir", cfg.output.dir);
  if (cfg.output.dir.empty()) r.fail("must not be empty", r.line_of("output.dir"), "output.dir");
  cfg.output.formats = r.words("output.formats", cfg.output.formats, {"csv", "json"});

  r.check_all_used();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file", 0, "");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

std::string normalized_config(const RunConfig& cfg) {
  std::ostringstream os;
  const auto& m = cfg.model;
  os << "model.preset = " << m.preset << "\n";
  os << "model.picture = " << m.picture << "\n";
  if (m.preset == "dephasing") {
    os << "model.omega = " << fmt(m.omega) << "\n";
  } else {
    emit_matrix(os, "model.hamiltonian", m.hamiltonian);
    os << "model.jumps = " << m.jumps.size() << "\n";
    for (std::size_t k = 0; k < m.jumps.size(); ++k) emit_matrix(os, "model.jump." + std::to_string(k + 1), m.jumps[k]);
  }

  const auto& e = cfg.ensemble;
  os << "ensemble.type = " << e.type << "\n";
  if (e.type == "single") {
    os << "ensemble.rate = " << fmt(e.rate) << "\n";
  } else if (e.type == "custom") {
    std::vector<std::string> r, w;
    for (double x : e.rates) r.push_back(fmt(x));
    for (double x : e.weights) w.push_back(fmt(x));
    os << "ensemble.rates = " << join(r) << "\n";
    os << "ensemble.weights = " << join(w) << "\n";
  } else if (e.type == "two_state") {
    os << "ensemble.p_up = " << fmt(e.p_up) << "\n";
    os << "ensemble.gamma_up = " << fmt(e.gamma_up) << "\n";
    os << "ensemble.gamma_down = " << fmt(e.gamma_down) << "\n";
  } else if (e.type == "manifold") {
    os << "ensemble.gamma = " << fmt(e.gamma) << "\n";
    os << "ensemble.a = " << fmt(e.a) << "\n";
    os << "ensemble.b = " << fmt(e.b) << "\n";
    os << "ensemble.n = " << e.n << "\n";
  } else {
    os << "ensemble.alpha = " << fmt(e.alpha) << "\n";
    os << "ensemble.mean_rate = " << fmt(e.mean_rate) << "\n";
    os << "ensemble.beta = " << fmt(e.beta) << "\n";
    os << "ensemble.mean_waiting_time = " << fmt(e.mean_waiting_time) << "\n";
  }

  os << "initial.state = " << cfg.initial.state << "\n";
  if (cfg.initial.state == "custom") emit_matrix(os, "initial", cfg.initial.matrix);

  os << "grid.t_max = " << fmt(cfg.grid.t_max) << "\n";
  os << "grid.steps = " << cfg.grid.steps << "\n";
  os << "grid.tau_max = " << fmt(cfg.grid.tau_max) << "\n";
  os << "grid.tau_steps = " << cfg.grid.tau_steps << "\n";

  os << "solver.list = " << join(cfg.solver.list) << "\n";
  os << "solver.trajectories = " << cfg.solver.trajectories << "\n";
  os << "solver.seed = " << cfg.solver.seed << "\n";
  os << "solver.threads = " << cfg.solver.threads << "\n";
  os << "solver.max_step = " << fmt(cfg.solver.max_step) << "\n";

  os << "correlate.observable = " << cfg.correlate.observable << "\n";
  if (cfg.correlate.observable == "custom") emit_matrix(os, "correlate", cfg.correlate.matrix);

  os << "fitpow.t_lo = " << fmt(cfg.fitpow.t_lo) << "\n";
  os << "fitpow.t_hi = " << fmt(cfg.fitpow.t_hi) << "\n";
  os << "fitpow.points = " << cfg.fitpow.points << "\n";

  os << "output.dir = " << cfg.output.dir << "\n";
  os << "output.formats = " << join(cfg.output.formats) << "\n";
  return os.str();
}

ratebath::RateEnsemble build_ensemble(const RunConfig& cfg) {
  const auto& e = cfg.ensemble;
  try {
    if (e.type == "single") return ratebath::single_rate(e.rate);
    if (e.type == "two_state") return ratebath::two_state_ensemble(e.p_up, e.gamma_up, e.gamma_down);
    if (e.type == "manifold") return ratebath::manifold_ensemble(e.gamma, e.a, e.b, e.n);
    if (e.type == "custom") {
      std::vector<ratebath::RateEntry> entries;
      for (std::size_t k = 0; k < e.rates.size(); ++k) entries.push_back({e.rates[k], e.weights[k]});
      return ratebath::RateEnsemble::from_entries(std::move(entries));
    }
  } catch (const std::invalid_argument& err) {
    semantic(err.what(), "ensemble");
  }
  semantic("the fractional model has no discrete rate decomposition; use it with `kernel` or `fitpow`",
           "ensemble.type");
}

ratebath::FractionalKernelModel build_fractional(const RunConfig& cfg) {
  const auto& e = cfg.ensemble;
  if (e.type != "fractional") semantic("not a fractional ensemble", "ensemble.type");
  try {
    return ratebath::fractional_model(e.alpha, e.mean_rate, e.beta, e.mean_waiting_time);
  } catch (const std::invalid_argument& err) {
    semantic(err.what(), "ensemble");
  }
}

dynamics::ModelSpec build_model(const RunConfig& cfg) {
  const auto ens = build_ensemble(cfg);
  const auto picture =
      cfg.model.picture == "interaction" ? dynamics::Picture::interaction : dynamics::Picture::schroedinger;
  if (cfg.model.preset == "dephasing") return dynamics::dephasing_model(cfg.model.omega, ens, picture);
  if (!qops::is_hermitian(cfg.model.hamiltonian, 1e-12)) semantic("Hamiltonian is not Hermitian", "model.hamiltonian");
  return {cfg.model.hamiltonian, cfg.model.jumps, ens, picture};
}

Operator build_initial_state(const RunConfig& cfg, Index dim) {
  const auto& name = cfg.initial.state;
  Operator rho;
  if (name == "mixed") {
    rho = qops::identity_operator(dim) / static_cast<double>(dim);
  } else if (name == "custom") {
    rho = cfg.initial.matrix;
    if (rho.rows() != dim) semantic("initial state dimension differs from the model", "initial.re");
  } else {
    if (dim != 2) semantic("named pure states need a 2-level model", "initial.state");
    rho = Operator::Zero(2, 2);
    if (name == "up") rho(0, 0) = 1.0;
    else if (name == "down") rho(1, 1) = 1.0;
    else rho << 0.5, (name == "plus" ? 0.5 : -0.5), (name == "plus" ? 0.5 : -0.5), 0.5;
  }
  try {
    qops::validate_density_matrix(rho);
  } catch (const std::invalid_argument& err) {
    semantic(err.what(), "initial");
  }
  return rho;
}

Operator build_observable(const RunConfig& cfg, Index dim) {
  const auto& name = cfg.correlate.observable;
  if (name == "identity") return qops::identity_operator(dim);
  if (name == "custom") {
    if (cfg.correlate.matrix.rows() != dim) semantic("observable dimension differs from the model", "correlate.re");
    return cfg.correlate.matrix;
  }
  if (dim != 2) semantic("named Pauli observables need a 2-level model", "correlate.observable");
  if (name == "sigma_x") return qops::sigma_x();
  if (name == "sigma_y") return qops::sigma_y();
  if (name == "sigma_z") return qops::sigma_z();
  if (name == "sigma_minus") return qops::sigma_minus();
  return qops::sigma_minus().adjoint();
}

}  // namespace nmbath::cli
