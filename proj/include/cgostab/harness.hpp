#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cgostab/cgo.hpp"
#include "cgostab/config.hpp"
#include "cgostab/forward.hpp"
#include "cgostab/parallel.hpp"
#include "cgostab/potential.hpp"
#include "cgostab/reconstruct.hpp"
#include "cgostab/stats.hpp"

namespace cgostab::harness {

inline constexpr std::string_view kDefaultConfig = R"(# grid for forward solves, CGO solves and the stability sweep
grid.radius = 1
grid.n_radial = 128
grid.n_angular = 256

# v1 = constant + bumps; each bump is "center_x center_y rho amplitude power"
potential.constant = 0
potential.bumps = 0 0 0.35 1 3
# bump2 in v2 = v1 + t bump2
perturbation.bumps = 0.05 0 0.25 1 3

# geometric lambda schedule start * ratio^k, k < count, at angle arg
schedule.start = 20
schedule.count = 7
schedule.ratio = 2
schedule.arg = 0

cgo.z0 = 0
cgo.lambda = 20
cgo.tol = 1e-10
cgo.k_max = 64

reconstruct.z0 = 0

lemma1.z0 = 0, 0.1, -0.1i
lemma1.lambda_start = 10
lemma1.lambda_count = 8
lemma1.probes = 8

lemma2.n_radial = 1024
lemma2.n_angular = 1024

lemma3.z0 = 0.1+0.05i

lemma4.z0 = 0.05
lemma4.lambda_count = 4

alessandrini.z0 = 0
alessandrini.lambda = 20
alessandrini.scale = 0.5

sweep.t_min = 1e-3
sweep.t_max = 1e-1
sweep.t_count = 8
sweep.gamma = default
sweep.norm = both
sweep.alpha = 0.1
)";

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "grid.radius", "grid.n_radial", "grid.n_angular", "potential.constant", "potential.bumps",
      "perturbation.bumps", "schedule.start", "schedule.count", "schedule.ratio", "schedule.arg",
      "cgo.z0", "cgo.lambda", "cgo.tol", "cgo.k_max", "reconstruct.z0",
      "lemma1.z0", "lemma1.lambda_start", "lemma1.lambda_count", "lemma1.probes",
      "lemma2.n_radial", "lemma2.n_angular", "lemma3.z0", "lemma4.z0", "lemma4.lambda_count",
      "alessandrini.z0", "alessandrini.lambda", "alessandrini.scale",
      "sweep.t_min", "sweep.t_max", "sweep.t_count", "sweep.gamma", "sweep.norm", "sweep.alpha"};
  return keys;
}

struct Settings {
  double radius = 1.0;
  int n_radial = 128;
  int n_angular = 256;
  double v_constant = 0.0;
  std::vector<Bump> v_bumps;
  std::vector<Bump> perturbation;

  double schedule_start = 20.0;
  int schedule_count = 7;
  double schedule_ratio = 2.0;
  double schedule_arg = 0.0;

  cplx cgo_z0 = 0.0;
  cplx cgo_lambda = 20.0;
  double cgo_tol = 1e-10;
  int cgo_k_max = 64;

  cplx reconstruct_z0 = 0.0;

  std::vector<cplx> lemma1_z0;
  double lemma1_start = 10.0;
  int lemma1_count = 8;
  int lemma1_probes = 8;
  int lemma2_n_radial = 1024;
  int lemma2_n_angular = 1024;
  cplx lemma3_z0 = 0.0;
  cplx lemma4_z0 = 0.05;
  int lemma4_count = 4;

  cplx aless_z0 = 0.0;
  cplx aless_lambda = 20.0;
  double aless_scale = 0.5;

  double t_min = 1e-3;
  double t_max = 1e-1;
  int t_count = 8;
  std::optional<double> gamma;
  std::string norm = "both";
  double alpha = 0.1;

  std::vector<cplx> schedule() const {
    std::vector<cplx> out;
    for (int k = 0; k < schedule_count; ++k) {
      out.push_back(std::polar(schedule_start * std::pow(schedule_ratio, k), schedule_arg));
    }
    return out;
  }

  std::vector<double> t_grid() const {
    std::vector<double> out;
    for (int k = 0; k < t_count; ++k) {
      out.push_back(t_count == 1 ? t_max : t_min * std::pow(t_max / t_min, static_cast<double>(k) / (t_count - 1)));
    }
    return out;
  }

  GridPtr grid() const { return build_disk_grid(radius, n_radial, n_angular); }

  Potential potential(GridPtr g) const { return cgostab::detail::assemble(std::move(g), v_constant, v_bumps); }
  Potential perturbation_potential(GridPtr g) const { return cgostab::detail::assemble(std::move(g), 0.0, perturbation); }
};

namespace detail {

inline std::vector<Bump> read_bumps(const Config& cfg, const std::string& key, double radius) {
  std::vector<Bump> out;
  for (const auto& rec : cfg.get_records(key, 5)) {
    Bump b{cplx(rec[0], rec[1]), rec[2], rec[3], static_cast<int>(rec[4])};
    if (!(b.rho > 0)) cfg.fail(key, "bump radius must be positive");
    if (b.power < 3 || b.power != rec[4]) cfg.fail(key, "bump power must be an integer >= 3");
    if (!(std::abs(b.center) + b.rho < radius)) cfg.fail(key, "bump support must lie strictly inside the disk");
    out.push_back(b);
  }
  return out;
}

}  // namespace detail

/// Settings from a config; keys missing from `cfg` take the default values.
inline Settings settings_from(Config cfg) {
  cfg.inherit(Config::parse(kDefaultConfig, "default"));
  cfg.require_known({known_keys().begin(), known_keys().end()});
  Settings s;
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0) || !std::isfinite(v)) cfg.fail(key, "must be positive");
    return v;
  };
  auto at_least = [&](const std::string& key, int v, int lo) {
    if (v < lo) cfg.fail(key, "must be >= " + std::to_string(lo));
    return v;
  };
  s.radius = positive("grid.radius", cfg.get_double("grid.radius"));
  s.n_radial = at_least("grid.n_radial", cfg.get_int("grid.n_radial"), 3);
  s.n_angular = at_least("grid.n_angular", cfg.get_int("grid.n_angular"), 8);
  if (s.n_angular % 2 != 0) cfg.fail("grid.n_angular", "must be even");
  s.v_constant = cfg.get_double("potential.constant");
  s.v_bumps = detail::read_bumps(cfg, "potential.bumps", s.radius);
  s.perturbation = detail::read_bumps(cfg, "perturbation.bumps", s.radius);
  if (s.perturbation.empty()) cfg.fail("perturbation.bumps", "needs at least one bump");

  s.schedule_start = cfg.get_double("schedule.start");
  if (!(s.schedule_start >= 1)) cfg.fail("schedule.start", "|lambda| must be >= 1");
  s.schedule_count = at_least("schedule.count", cfg.get_int("schedule.count"), 1);
  s.schedule_ratio = cfg.get_double("schedule.ratio");
  if (!(s.schedule_ratio > 1)) cfg.fail("schedule.ratio", "must be > 1");
  s.schedule_arg = cfg.get_double("schedule.arg");

  s.cgo_z0 = cfg.get_complex("cgo.z0");
  s.cgo_lambda = cfg.get_complex("cgo.lambda");
  if (!(std::abs(s.cgo_lambda) >= 1)) cfg.fail("cgo.lambda", "|lambda| must be >= 1");
  s.cgo_tol = positive("cgo.tol", cfg.get_double("cgo.tol"));
  s.cgo_k_max = at_least("cgo.k_max", cfg.get_int("cgo.k_max"), 1);
  s.reconstruct_z0 = cfg.get_complex("reconstruct.z0");

  s.lemma1_z0 = cfg.get_complex_list("lemma1.z0");
  s.lemma1_start = cfg.get_double("lemma1.lambda_start");
  if (!(s.lemma1_start >= 1)) cfg.fail("lemma1.lambda_start", "|lambda| must be >= 1");
  s.lemma1_count = at_least("lemma1.lambda_count", cfg.get_int("lemma1.lambda_count"), 2);
  s.lemma1_probes = at_least("lemma1.probes", cfg.get_int("lemma1.probes"), 1);
  s.lemma2_n_radial = at_least("lemma2.n_radial", cfg.get_int("lemma2.n_radial"), 3);
  s.lemma2_n_angular = at_least("lemma2.n_angular", cfg.get_int("lemma2.n_angular"), 8);
  s.lemma3_z0 = cfg.get_complex("lemma3.z0");
  s.lemma4_z0 = cfg.get_complex("lemma4.z0");
  s.lemma4_count = at_least("lemma4.lambda_count", cfg.get_int("lemma4.lambda_count"), 1);

  s.aless_z0 = cfg.get_complex("alessandrini.z0");
  s.aless_lambda = cfg.get_complex("alessandrini.lambda");
  if (!(std::abs(s.aless_lambda) >= 1)) cfg.fail("alessandrini.lambda", "|lambda| must be >= 1");
  s.aless_scale = cfg.get_double("alessandrini.scale");

  s.t_min = positive("sweep.t_min", cfg.get_double("sweep.t_min"));
  s.t_max = positive("sweep.t_max", cfg.get_double("sweep.t_max"));
  if (!(s.t_max >= s.t_min)) cfg.fail("sweep.t_max", "must be >= sweep.t_min");
  s.t_count = at_least("sweep.t_count", cfg.get_int("sweep.t_count"), 2);
  if (cfg.get_string("sweep.gamma") != "default") s.gamma = cfg.get_double("sweep.gamma");
  s.norm = cfg.get_string("sweep.norm");
  if (s.norm != "inf" && s.norm != "one" && s.norm != "both") cfg.fail("sweep.norm", "must be inf, one or both");
  s.alpha = cfg.get_double("sweep.alpha");
  if (!(s.alpha > 0 && s.alpha < 0.2)) cfg.fail("sweep.alpha", "must lie in (0, 1/5)");

  for (const auto& [key, z] : {std::pair<std::string, cplx>{"cgo.z0", s.cgo_z0}, {"reconstruct.z0", s.reconstruct_z0},
                               {"lemma3.z0", s.lemma3_z0}, {"lemma4.z0", s.lemma4_z0}, {"alessandrini.z0", s.aless_z0}}) {
    if (!(std::abs(z) < s.radius)) cfg.fail(key, "z0 must lie inside the disk");
  }
  for (cplx z : s.lemma1_z0) {
    if (!(std::abs(z) < s.radius)) cfg.fail("lemma1.z0", "z0 must lie inside the disk");
  }
  return s;
}

inline Settings default_settings() { return settings_from(Config::parse(kDefaultConfig, "default")); }

// ---------------------------------------------------------------- reports

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// A CSV table with the versioned header comment.
struct CsvTable {
  std::string subcommand;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::logic_error("CsvTable: row width");
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream out;
    out << "# cgo-stab v1 " << subcommand << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
      out << '\n';
    }
    return out.str();
  }
};

struct Check {
  std::string name;
  double value = 0.0;
  double lower = -INFINITY;
  double upper = INFINITY;
  bool passed = false;
  std::string note;
};

inline Check range_check(std::string name, double value, double lower, double upper, std::string note = {}) {
  return {std::move(name), value, lower, upper, std::isfinite(value) && value >= lower && value <= upper,
          std::move(note)};
}

inline Check flag_check(std::string name, bool ok, std::string note = {}) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, 1.0, ok, std::move(note)};
}

struct SuiteReport {
  std::string name;
  CsvTable table;
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  CsvTable checks_table() const {
    CsvTable t{name + " checks", {"check", "value", "lower", "upper", "passed", "note"}, {}};
    for (const auto& c : checks) {
      t.add({c.name, fmt(c.value), fmt(c.lower), fmt(c.upper), c.passed ? "true" : "false", c.note});
    }
    return t;
  }
};

inline std::string cplx_str(cplx z) {
  std::ostringstream out;
  out << fmt(z.real()) << (z.imag() < 0 ? "-" : "+") << fmt(std::abs(z.imag())) << 'i';
  return out.str();
}

// ---------------------------------------------------------------- lemma 1

/// Seeded probe fields a exp(-|z - c|^2 / s^2)(1 + b z); the z-factor is
/// holomorphic, so dbar u = -(z - c) / s^2 u exactly.
struct Probe {
  cplx a, b, c;
  double s;
  cplx operator()(cplx z) const { return a * std::exp(-std::norm(z - c) / (s * s)) * (1.0 + b * z); }
  cplx dbar(cplx z) const { return -(z - c) / (s * s) * (*this)(z); }
};

inline std::vector<Probe> make_probes(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Probe> out;
  for (int k = 0; k < count; ++k) {
    const double rc = 0.5 * std::sqrt(unit(rng)), ac = 2 * std::numbers::pi * unit(rng);
    const double s = 0.2 + 0.3 * unit(rng);
    const cplx a = std::polar(1.0, 2 * std::numbers::pi * unit(rng));
    const cplx b = std::polar(0.5 * unit(rng), 2 * std::numbers::pi * unit(rng));
    out.push_back({a, b, std::polar(rc, ac), s});
  }
  return out;
}

inline SuiteReport run_lemma1(const Settings& s, std::uint64_t seed, int threads) {
  SuiteReport rep{"lemma1",
                  {"verify lemma1",
                   {"z0", "abs_lambda", "est1_norm", "est2_norm", "n_radial", "n_angular", "required_angular",
                    "radial_phase_step"},
                   {}},
                  {}};
  const auto probes = make_probes(s.lemma1_probes, seed);
  struct Cell {
    cplx z0;
    double lam;
    double est1 = 0, est2 = 0;
    int nr = 0, na = 0;
    PhaseResolution res;
  };
  std::vector<Cell> cells;
  for (cplx z0 : s.lemma1_z0) {
    for (int k = 0; k < s.lemma1_count; ++k) cells.push_back({z0, s.lemma1_start * std::pow(2.0, k)});
  }
  parallel_for(cells.size(), threads, [&](std::size_t idx) {
    Cell& c = cells[idx];
    const CgoParams p(c.z0, c.lam);
    const GridPtr g = phase_resolved_grid(s.radius, p, s.n_radial, s.n_angular);
    c.nr = g->n_radial();
    c.na = g->n_angular();
    c.res = phase_resolution(*g, p);
    for (const Probe& probe : probes) {
      const GridFunction u = GridFunction::sample(g, probe);
      double norm_u = 0.0;
      for (cplx z : g->interior_nodes()) norm_u = std::max({norm_u, std::abs(probe(z)), std::abs(probe.dbar(z))});
      for (cplx z : g->boundary_nodes()) norm_u = std::max({norm_u, std::abs(probe(z)), std::abs(probe.dbar(z))});
      const GreenNorms n = g_apply_norms(u, p, 4.0);
      c.est1 = std::max(c.est1, n.c1zbar() / norm_u);
      c.est2 = std::max(c.est2, n.lp_dz / norm_u);
    }
  });
  for (cplx z0 : s.lemma1_z0) {
    std::vector<double> lam, e1, e2;
    for (const Cell& c : cells) {
      if (c.z0 != z0) continue;
      rep.table.add({cplx_str(z0), fmt(c.lam), fmt(c.est1), fmt(c.est2), std::to_string(c.nr), std::to_string(c.na),
                     fmt(c.res.required_angular), fmt(c.res.radial_phase_step)});
      lam.push_back(c.lam);
      e1.push_back(c.est1);
      e2.push_back(c.est2);
    }
    rep.checks.push_back(range_check("slope_est1 z0=" + cplx_str(z0), loglog_fit(lam, e1).slope, -0.6, -0.4));
    rep.checks.push_back(range_check("slope_est2 z0=" + cplx_str(z0), loglog_fit(lam, e2).slope, -0.6, -0.4,
                                     "L4 norm of dz g u"));
  }
  return rep;
}

// ---------------------------------------------------------------- lemma 2

inline double log_shape(double lam) { return std::log(3.0 * lam) / lam; }

inline SuiteReport run_lemma2(const Settings& s) {
  SuiteReport rep{"lemma2",
                  {"verify lemma2",
                   {"abs_lambda", "h0_re", "h0_im", "estimate", "truth", "error", "envelope", "passed", "n_radial",
                    "n_angular", "required_angular", "radial_phase_step"},
                   {}},
                  {}};
  if (s.v_bumps.empty()) throw std::invalid_argument("lemma2: the potential needs a bump");
  const GridPtr g = build_disk_grid(s.radius, s.lemma2_n_radial, s.lemma2_n_angular);
  const Potential v = s.potential(g);
  const cplx z0 = s.v_bumps.front().center;
  const double truth = v.evaluate(z0);
  const auto table = reconstruct_point(v, z0, s.schedule(), truth);
  rep.checks.push_back(flag_check("schedule resolved", table.rows.size() == s.schedule().size(),
                                  table.warnings.empty() ? "" : table.warnings.front()));
  if (table.rows.empty()) return rep;
  const auto env = FrozenEnvelope::fit(*table.rows.front().error, log_shape(table.rows.front().abs_lambda));
  bool all = true;
  for (const auto& row : table.rows) {
    const double shape = log_shape(row.abs_lambda);
    const bool ok = env.holds(*row.error, shape);
    all = all && ok;
    rep.table.add({fmt(row.abs_lambda), fmt(row.h0.real()), fmt(row.h0.imag()), fmt(row.estimate), fmt(truth),
                   fmt(*row.error), fmt(env.bound(shape)), ok ? "true" : "false", std::to_string(g->n_radial()),
                   std::to_string(g->n_angular()), fmt(row.required_angular), fmt(row.radial_phase_step)});
  }
  rep.checks.push_back(flag_check("error envelope frozen at first lambda", all, "C = " + fmt(env.constant())));
  const double rel = *table.rows.back().error / std::max(std::abs(truth), 1e-300);
  rep.checks.push_back(range_check("final relative error", rel, 0.0, 0.05,
                                   "|lambda| = " + fmt(table.rows.back().abs_lambda)));
  return rep;
}

// ---------------------------------------------------------------- lemma 3

struct NamedField {
  std::string name;
  std::function<cplx(cplx)> f;
};

inline SuiteReport run_lemma3(const Settings& s, int threads) {
  SuiteReport rep{"lemma3",
                  {"verify lemma3",
                   {"field", "abs_lambda", "W_abs", "bound", "ratio", "passed", "n_radial", "n_angular",
                    "required_angular", "radial_phase_step"},
                   {}},
                  {}};
  const Potential v0 = s.potential(s.grid());
  std::vector<NamedField> fields = {
      {"potential", [&v0](cplx z) { return cplx(v0.evaluate(z), 0.0); }},
      {"gauss_affine", [](cplx z) { return (1.0 + z) * std::exp(-std::norm(z - 0.2)); }},
      {"zbar_squared", [](cplx z) { return std::conj(z) * std::conj(z) + cplx(0.0, 0.5); }},
  };
  const auto schedule = s.schedule();
  struct Cell {
    double w_abs = 0;
    int nr = 0, na = 0;
    PhaseResolution res;
  };
  std::vector<Cell> cells(schedule.size() * fields.size());
  parallel_for(schedule.size(), threads, [&](std::size_t k) {
    const CgoParams p(s.lemma3_z0, schedule[k]);
    const GridPtr g = phase_resolved_grid(s.radius, p, s.n_radial, s.n_angular, PhaseUse::integral);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const GridFunction w = GridFunction::sample(g, fields[f].f);
      Cell& c = cells[f * schedule.size() + k];
      c.w_abs = std::abs(moment_W(w, p).value);
      c.nr = g->n_radial();
      c.na = g->n_angular();
      c.res = moment_resolution(w, p);
    }
  });
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const Cell* row = &cells[f * schedule.size()];
    const auto env = FrozenEnvelope::fit(row[0].w_abs, log_shape(std::abs(schedule[0])));
    bool all = true;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const double lam = std::abs(schedule[k]);
      const bool ok = env.holds(row[k].w_abs, log_shape(lam));
      all = all && ok;
      rep.table.add({fields[f].name, fmt(lam), fmt(row[k].w_abs), fmt(env.bound(log_shape(lam))),
                     fmt(row[k].w_abs / log_shape(lam)), ok ? "true" : "false", std::to_string(row[k].nr),
                     std::to_string(row[k].na), fmt(row[k].res.required_angular), fmt(row[k].res.radial_phase_step)});
    }
    rep.checks.push_back(flag_check("envelope " + fields[f].name, all, "C = " + fmt(env.constant())));
  }
  return rep;
}

// ---------------------------------------------------------------- lemma 4

inline SuiteReport run_lemma4(const Settings& s, int threads) {
  constexpr int kTerms = 4;
  SuiteReport rep{"lemma4",
                  {"verify lemma4",
                   {"abs_lambda", "k", "tail", "tail_ratio", "rho", "delta", "tail_bound", "h_tail", "h_envelope", "passed",
                    "iterations", "n_radial", "n_angular", "radial_phase_step"},
                   {}},
                  {}};
  auto schedule = s.schedule();
  schedule.resize(std::min<std::size_t>(schedule.size(), s.lemma4_count));
  struct Cell {
    std::vector<double> tail, h_tail;
    double delta = 0, rho = 0, step = 0;
    int iterations = 0, nr = 0, na = 0;
    std::string failure;
  };
  std::vector<Cell> cells(schedule.size());
  parallel_for(schedule.size(), threads, [&](std::size_t k) {
    Cell& c = cells[k];
    const CgoParams p(s.lemma4_z0, schedule[k]);
    const GridPtr g = phase_resolved_grid(s.radius, p, s.n_radial, s.n_angular);
    c.nr = g->n_radial();
    c.na = g->n_angular();
    c.step = phase_resolution(*g, p).radial_phase_step;
    const Potential v = s.potential(g);
    // Terms shrink geometrically without a rounding floor, so a tiny tolerance
    // keeps mu - mu^(k) measurable for every k checked.
    SolveOptions opt;
    opt.tol = 1e-24;
    opt.k_max = std::max(s.cgo_k_max, 64);
    opt.keep_terms = true;
    try {
      const CgoSolution sol = solve_mu(v, p, opt);
      c.delta = sol.contraction;
      c.rho = sol.term_norms.size() > 2 ? sol.term_norms[2] / sol.term_norms[1] : 0.0;
      c.iterations = sol.iterations;
      // mu - mu^(k) summed from the smallest term up, so tails far below
      // |mu| ~ 1 are not lost to cancellation; h - h^(k) = W(v (mu - mu^(k))).
      const int n = static_cast<int>(sol.terms.size());
      GridFunction tail = GridFunction::constant(g, 0.0), tail_dbar = tail;
      std::vector<double> tails(n, 0.0), h_tails(n, 0.0);
      for (int j = n - 1; j >= 0; --j) {
        tails[j] = std::max(tail.sup_norm(), tail_dbar.sup_norm());
        if (j <= kTerms + 1) h_tails[j] = std::abs(oscillatory_moment(v.field * tail, p));
        tail += sol.terms[j];
        tail_dbar += sol.term_dbars[j];
      }
      for (int j = 0; j <= kTerms + 1 && j < n; ++j) {
        c.tail.push_back(tails[j]);
        c.h_tail.push_back(h_tails[j]);
      }
    } catch (const Error& e) {
      c.failure = e.what();
    }
  });

  std::optional<FrozenEnvelope> env;
  double v_norm = 0.0;
  {
    const Potential v = s.potential(s.grid());
    v_norm = c1zbar_norm(v.field, GridFunction::sample(v.grid_ptr(), [&](cplx z) { return v.evaluate_dbar(z); }));
  }
  auto h_shape = [&](double lam, double delta, int k) {
    return log_shape(lam) * std::pow(delta, k + 1) / (1.0 - delta) * v_norm;
  };
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const Cell& c = cells[k];
    const double lam = std::abs(schedule[k]);
    if (!c.failure.empty()) {
      rep.checks.push_back(flag_check("solve |lambda|=" + fmt(lam), false, c.failure));
      continue;
    }
    if (!env) env = FrozenEnvelope::fit(c.h_tail[0], h_shape(lam, c.delta, 0));
    bool ratios_ok = true, tails_ok = true, h_ok = true;
    for (int j = 0; j <= kTerms && j + 1 < static_cast<int>(c.tail.size()); ++j) {
      const double ratio = c.tail[j + 1] / c.tail[j];
      const double bound = std::pow(c.delta, j + 1) / (1.0 - c.delta);
      const double shape = h_shape(lam, c.delta, j);
      const bool row_ratio = ratio <= 1.2 * c.rho;
      const bool row_tail = c.tail[j] <= bound;
      const bool row_h = env->holds(c.h_tail[j], shape);
      ratios_ok = ratios_ok && row_ratio;
      tails_ok = tails_ok && row_tail;
      h_ok = h_ok && row_h;
      rep.table.add({fmt(lam), std::to_string(j), fmt(c.tail[j]), fmt(ratio), fmt(c.rho), fmt(c.delta), fmt(bound),
                     fmt(c.h_tail[j]), fmt(env->bound(shape)), row_ratio && row_tail && row_h ? "true" : "false",
                     std::to_string(c.iterations), std::to_string(c.nr), std::to_string(c.na), fmt(c.step)});
    }
    rep.checks.push_back(flag_check("tail ratio <= 1.2 rho |lambda|=" + fmt(lam), ratios_ok));
    rep.checks.push_back(flag_check("mu tail bound |lambda|=" + fmt(lam), tails_ok));
    rep.checks.push_back(flag_check("h tail envelope |lambda|=" + fmt(lam), h_ok,
                                    env ? "C = " + fmt(env->constant()) : ""));
  }
  return rep;
}

// ---------------------------------------------------------------- alessandrini

inline SuiteReport run_alessandrini(const Settings& s, int threads) {
  SuiteReport rep{"alessandrini",
                  {"verify alessandrini",
                   {"n_radial", "n_angular", "I_re", "I_im", "J_re", "J_im", "relative_gap", "decomposition_error",
                    "kernel_noise_floor", "contraction", "dtn_residual", "radial_phase_step"},
                   {}},
                  {}};
  const CgoParams p(s.aless_z0, s.aless_lambda);
  std::vector<double> gaps;
  for (int level = 0; level < 2; ++level) {
    const int scale = 1 << level;
    const GridPtr g = build_disk_grid(s.radius, s.n_radial * scale, s.n_angular * scale);
    const Potential v1 = s.potential(g);
    const Potential v2 = add_scaled(v1, s.perturbation_potential(g), s.aless_scale);
    const DtnMatrix d1 = dtn_map(v1, threads), d2 = dtn_map(v2, threads);
    const auto t = alessandrini_terms(v1, v2, p, d1, d2);
    const double decomposition = std::abs(t.I - (t.I1 + t.I2 + t.I3 + t.I4));
    gaps.push_back(t.relative_gap);
    rep.table.add({std::to_string(g->n_radial()), std::to_string(g->n_angular()), fmt(t.I.real()), fmt(t.I.imag()),
                   fmt(t.J.real()), fmt(t.J.imag()), fmt(t.relative_gap), fmt(decomposition),
                   fmt(t.kernel_noise_floor), fmt(std::max(t.contraction1, t.contraction2)),
                   fmt(std::max(d1.max_column_residual, d2.max_column_residual)),
                   fmt(phase_resolution(*g, p).radial_phase_step)});
    rep.checks.push_back(range_check("decomposition " + std::to_string(g->n_radial()) + "x" +
                                         std::to_string(g->n_angular()),
                                     decomposition, 0.0, 1e-10));
  }
  rep.checks.push_back(range_check("relative gap at default grid", gaps[0], 0.0, 0.1));
  rep.checks.push_back(flag_check("gap decreases under refinement", gaps[1] < gaps[0],
                                  fmt(gaps[0]) + " -> " + fmt(gaps[1])));
  return rep;
}

inline SuiteReport run_lemma_suite(const std::string& which, const Settings& s, std::uint64_t seed, int threads) {
  if (which == "lemma1") return run_lemma1(s, seed, threads);
  if (which == "lemma2") return run_lemma2(s);
  if (which == "lemma3") return run_lemma3(s, threads);
  if (which == "lemma4") return run_lemma4(s, threads);
  if (which == "alessandrini") return run_alessandrini(s, threads);
  throw std::invalid_argument("unknown suite '" + which + "' (lemma1, lemma2, lemma3, lemma4, alessandrini)");
}

// ---------------------------------------------------------------- stability

struct StabilityRow {
  std::string norm;  // "inf" or "one"
  double t = 0.0;
  double eps = 0.0;
  double sup_err = 0.0;
  double lambda_used = 0.0;
  double bound_value = 0.0;
  bool passed = false;
  int n_radial = 0, n_angular = 0;
  double dtn_residual = 0.0;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double gamma = 0.0;
  double L = 0.0;
  double alpha = 0.1;
  std::string norm_variant;
  double constant_inf = 0.0;
  double constant_one = 0.0;
  double lambda_max = 0.0;
  std::vector<double> excluded_t;
  std::vector<std::string> failures;
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  CsvTable table() const {
    CsvTable t{"stability",
               {"norm", "t", "eps", "sup_err", "lambda_used", "bound_value", "passed", "n_radial", "n_angular",
                "dtn_residual"},
               {}};
    for (const auto& r : rows) {
      t.add({r.norm, fmt(r.t), fmt(r.eps), fmt(r.sup_err), fmt(r.lambda_used), fmt(r.bound_value),
             r.passed ? "true" : "false", std::to_string(r.n_radial), std::to_string(r.n_angular), fmt(r.dtn_residual)});
    }
    return t;
  }
};

/// (log(3 + 1/eps))^{-1/2} log(3 log(3 + 1/eps))
inline double theorem_shape(double eps) {
  const double l = std::log(3.0 + 1.0 / eps);
  return std::log(3.0 * l) / std::sqrt(l);
}

/// (log(3 + 1/eps))^{-alpha}
inline double weak_shape(double eps, double alpha) { return std::pow(std::log(3.0 + 1.0 / eps), -alpha); }

/// Largest |lambda| the grid resolves for g_apply with any z0 in the disk.
inline double resolvable_lambda(const DiskGrid& g) {
  const double R = g.radius(), d = 2.0 * R;
  const double angular = (g.n_angular() - 32.0) / (2.0 * 1.1 * 4.0 * R * d);
  const double radial = 2.0 / (4.0 * d * g.dr());
  return std::max(1.0, std::min(angular, radial));
}

inline StabilityReport run_stability_sweep(const Settings& s, int threads) {
  StabilityReport rep;
  const GridPtr g = s.grid();
  rep.L = 2.0 * s.radius;  // largest |z - z0| over boundary z and z0 in the closed disk
  const double gamma_max = 1.0 / (2.0 * rep.L * rep.L + 1.0);
  rep.gamma = s.gamma.value_or(0.2 * gamma_max);
  if (!(rep.gamma > 0 && rep.gamma < gamma_max)) {
    throw std::invalid_argument("stability: gamma must lie in (0, " + fmt(gamma_max) + ")");
  }
  rep.alpha = s.alpha;
  rep.norm_variant = s.norm;
  rep.lambda_max = resolvable_lambda(*g);

  const Potential v1 = s.potential(g);
  const Potential bump2 = s.perturbation_potential(g);
  const double bump2_sup = s.perturbation.size() == 1 ? std::abs(s.perturbation.front().amplitude) : bump2.field.sup_norm();

  std::vector<double> ts = s.t_grid();
  ts.insert(ts.begin(), 0.0);
  struct Cell {
    double eps_inf = 0, eps_one = 0, residual = 0;
    std::string failure;
  };
  std::vector<Cell> cells(ts.size());
  std::optional<DtnMatrix> base;
  try {
    base.emplace(dtn_map(v1, threads));
  } catch (const Error& e) {
    rep.failures.push_back("t=0: " + std::string(e.what()));
    rep.checks.push_back(flag_check("base DtN map", false, e.what()));
    return rep;
  }
  parallel_for(ts.size(), threads, [&](std::size_t k) {
    Cell& c = cells[k];
    try {
      const Potential v2 = add_scaled(v1, bump2, ts[k]);
      const DtnMatrix d2 = ts[k] == 0.0 ? *base : dtn_map(v2, 1);
      const DtnMatrix diff = d2 - *base;
      c.eps_inf = op_norm_inf(diff);
      c.eps_one = norm1(diff);
      c.residual = diff.max_column_residual;
    } catch (const Error& e) {
      c.failure = e.what();
    }
  });

  std::vector<std::string> variants;
  if (s.norm == "inf" || s.norm == "both") variants.push_back("inf");
  if (s.norm == "one" || s.norm == "both") variants.push_back("one");
  for (const std::string& variant : variants) {
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const Cell& c = cells[k];
      if (!c.failure.empty()) {
        if (variant == variants.front()) rep.failures.push_back("t=" + fmt(ts[k]) + ": " + c.failure);
        continue;
      }
      const double eps = variant == "inf" ? c.eps_inf : c.eps_one;
      if (eps == 0.0) {
        if (variant == variants.front()) rep.excluded_t.push_back(ts[k]);
        continue;
      }
      kept.push_back(k);
    }
    if (kept.empty()) {
      rep.checks.push_back(flag_check(variant + ": rows available", false));
      continue;
    }
    auto eps_of = [&](std::size_t k) { return variant == "inf" ? cells[k].eps_inf : cells[k].eps_one; };
    auto shape = [&](double eps) { return variant == "inf" ? theorem_shape(eps) : weak_shape(eps, s.alpha); };
    const std::size_t anchor = *std::max_element(kept.begin(), kept.end(),
                                                 [&](std::size_t a, std::size_t b) { return eps_of(a) < eps_of(b); });
    const auto env = FrozenEnvelope::fit(ts[anchor] * bump2_sup, shape(eps_of(anchor)));
    (variant == "inf" ? rep.constant_inf : rep.constant_one) = env.constant();
    bool all = true, monotone = true;
    for (std::size_t n = 0; n < kept.size(); ++n) {
      const std::size_t k = kept[n];
      StabilityRow row;
      row.norm = variant;
      row.t = ts[k];
      row.eps = eps_of(k);
      row.sup_err = ts[k] * bump2_sup;
      row.lambda_used = std::clamp(rep.gamma * std::log(3.0 + 1.0 / row.eps), 1.0, rep.lambda_max);
      row.bound_value = env.bound(shape(row.eps));
      row.passed = env.holds(row.sup_err, shape(row.eps));
      row.n_radial = g->n_radial();
      row.n_angular = g->n_angular();
      row.dtn_residual = cells[k].residual;
      all = all && row.passed;
      if (n > 0) monotone = monotone && row.eps > rep.rows.back().eps;
      rep.rows.push_back(row);
    }
    rep.checks.push_back(flag_check(variant + ": all rows within the frozen bound", all, "C = " + fmt(env.constant())));
    rep.checks.push_back(flag_check(variant + ": eps strictly increasing in t", monotone));
  }
  if (!rep.failures.empty()) rep.checks.push_back(flag_check("all DtN solves succeeded", false, rep.failures.front()));
  return rep;
}

}  // namespace cgostab::harness
