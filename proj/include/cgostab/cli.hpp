#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cgostab/dtn_io.hpp"
#include "cgostab/harness.hpp"

namespace cgostab {

namespace cli {

enum ExitCode { kOk = 0, kChecksFailed = 1, kUsage = 2, kRuntime = 3 };

struct Output {
  std::string dir;
  std::ostream& out;

  bool to_files() const { return !dir.empty(); }

  void write(const std::string& name, const std::string& content) const {
    if (!to_files()) {
      out << content;
      return;
    }
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
  }

  std::string path(const std::string& name) const {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
  }
};

inline nlohmann::json bumps_json(const std::vector<Bump>& bumps) {
  auto arr = nlohmann::json::array();
  for (const auto& b : bumps) {
    arr.push_back({{"center", {b.center.real(), b.center.imag()}}, {"rho", b.rho}, {"amplitude", b.amplitude},
                   {"power", b.power}});
  }
  return arr;
}

inline nlohmann::json grid_json(const DiskGrid& g) {
  return {{"radius", g.radius()}, {"n_radial", g.n_radial()}, {"n_angular", g.n_angular()}};
}

inline nlohmann::json checks_json(const std::vector<harness::Check>& checks) {
  auto arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j = {{"name", c.name}, {"value", c.value}, {"passed", c.passed}, {"note", c.note}};
    if (std::isfinite(c.lower)) j["lower"] = c.lower;
    if (std::isfinite(c.upper)) j["upper"] = c.upper;
    arr.push_back(j);
  }
  return arr;
}

inline void report_checks(std::ostream& os, const std::vector<harness::Check>& checks) {
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << harness::fmt(c.value);
    if (std::isfinite(c.lower) || std::isfinite(c.upper)) {
      os << " in [" << harness::fmt(c.lower) << ", " << harness::fmt(c.upper) << "]";
    }
    if (!c.note.empty()) os << " (" << c.note << ")";
    os << '\n';
  }
}

inline bool all_passed(const std::vector<harness::Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const harness::Check& c) { return c.passed; });
}

inline int run_forward(const harness::Settings& s, const Output& o, int threads, std::ostream& err) {
  const Potential v = s.potential(s.grid());
  const DirichletSolver solver(v);
  const DtnMatrix dtn = dtn_map(v, threads);
  std::vector<harness::Check> checks = {
      harness::range_check("max column residual", dtn.max_column_residual, 0.0, DirichletSolver::kResidualTolerance)};
  harness::CsvTable t{"forward", {"quantity", "value"}, {}};
  t.add({"n_boundary", std::to_string(dtn.size())});
  t.add({"op_norm_inf", harness::fmt(op_norm_inf(dtn))});
  t.add({"norm1", harness::fmt(norm1(dtn))});
  t.add({"condition_estimate", harness::fmt(solver.condition_estimate())});
  t.add({"max_column_residual", harness::fmt(dtn.max_column_residual)});
  o.write("forward.csv", t.str());
  if (o.to_files()) {
    write_dtn_binary(o.path("dtn.bin"), dtn);
    write_dtn_nodes_csv(o.path("dtn_nodes.csv"), dtn.grid());
    nlohmann::json meta = {{"grid", grid_json(dtn.grid())},
                           {"potential", {{"constant", s.v_constant}, {"bumps", bumps_json(s.v_bumps)}}},
                           {"checks", checks_json(checks)}};
    o.write("forward.json", meta.dump(2) + "\n");
  } else {
    err << "note: no --out given, DtN cache not written\n";
  }
  report_checks(o.to_files() ? o.out : err, checks);
  return all_passed(checks) ? kOk : kChecksFailed;
}

inline int run_cgo(const harness::Settings& s, const Output& o, std::ostream& err) {
  const CgoParams p(s.cgo_z0, s.cgo_lambda);
  const GridPtr g = phase_resolved_grid(s.radius, p, s.n_radial, s.n_angular);
  const Potential v = s.potential(g);
  SolveOptions opt;
  opt.tol = s.cgo_tol;
  opt.k_max = s.cgo_k_max;
  const CgoSolution sol = solve_mu(v, p, opt);
  const double eq_residual = mu_equation_residual(v, sol);
  const PhaseResolution res = phase_resolution(*g, p);
  harness::CsvTable t{"cgo", {"iteration", "term_norm", "n_radial", "n_angular", "radial_phase_step"}, {}};
  for (std::size_t j = 0; j < sol.term_norms.size(); ++j) {
    t.add({std::to_string(j), harness::fmt(sol.term_norms[j]), std::to_string(g->n_radial()),
           std::to_string(g->n_angular()), harness::fmt(res.radial_phase_step)});
  }
  std::vector<harness::Check> checks = {
      harness::range_check("mu equation residual", eq_residual, 0.0, 0.1),
      harness::range_check("contraction", sol.contraction, 0.0, 1.0)};
  o.write("cgo.csv", t.str());
  if (o.to_files()) {
    nlohmann::json meta = {{"grid", grid_json(*g)},
                           {"z0", {s.cgo_z0.real(), s.cgo_z0.imag()}},
                           {"lambda", {s.cgo_lambda.real(), s.cgo_lambda.imag()}},
                           {"iterations", sol.iterations},
                           {"contraction", sol.contraction},
                           {"fixed_point_residual", sol.residual},
                           {"mu_equation_residual", eq_residual},
                           {"required_angular", res.required_angular},
                           {"radial_phase_step", res.radial_phase_step},
                           {"checks", checks_json(checks)}};
    o.write("cgo.json", meta.dump(2) + "\n");
  }
  report_checks(o.to_files() ? o.out : err, checks);
  return all_passed(checks) ? kOk : kChecksFailed;
}

inline int run_reconstruct(const harness::Settings& s, const Output& o, std::ostream& err) {
  const GridPtr g = s.grid();
  const Potential v = s.potential(g);
  const double truth = v.evaluate(s.reconstruct_z0);
  const auto table = reconstruct_point(v, s.reconstruct_z0, s.schedule(), truth);
  harness::CsvTable t{"reconstruct",
                      {"abs_lambda", "h0_re", "h0_im", "estimate", "truth", "error", "n_radial", "n_angular",
                       "required_angular", "radial_phase_step"},
                      {}};
  for (const auto& row : table.rows) {
    t.add({harness::fmt(row.abs_lambda), harness::fmt(row.h0.real()), harness::fmt(row.h0.imag()),
           harness::fmt(row.estimate), harness::fmt(truth), harness::fmt(*row.error), std::to_string(g->n_radial()),
           std::to_string(g->n_angular()), harness::fmt(row.required_angular), harness::fmt(row.radial_phase_step)});
  }
  o.write("reconstruct.csv", t.str());
  for (const auto& w : table.warnings) err << "warning: " << w << '\n';
  std::vector<harness::Check> checks = {harness::flag_check("rows computed", !table.rows.empty())};
  report_checks(o.to_files() ? o.out : err, checks);
  return all_passed(checks) ? kOk : kChecksFailed;
}

inline int run_verify(const std::string& which, const harness::Settings& s, const Output& o, std::uint64_t seed,
                      int threads, std::ostream& err) {
  const harness::SuiteReport rep = harness::run_lemma_suite(which, s, seed, threads);
  o.write(which + ".csv", rep.table.str());
  if (o.to_files()) o.write(which + "_checks.csv", rep.checks_table().str());
  report_checks(o.to_files() ? o.out : err, rep.checks);
  return rep.passed() ? kOk : kChecksFailed;
}

inline int run_stability(const harness::Settings& s, const Output& o, int threads, std::ostream& err) {
  const harness::StabilityReport rep = harness::run_stability_sweep(s, threads);
  o.write("stability.csv", rep.table().str());
  if (o.to_files()) {
    nlohmann::json meta = {
        {"gamma", rep.gamma},
        {"L", rep.L},
        {"alpha", rep.alpha},
        {"norm_variant", rep.norm_variant},
        {"lambda_max", rep.lambda_max},
        {"constant_inf", rep.constant_inf},
        {"constant_one", rep.constant_one},
        {"grid", grid_json(*s.grid())},
        {"potentials",
         {{"v1", {{"constant", s.v_constant}, {"bumps", bumps_json(s.v_bumps)}}},
          {"bump2", bumps_json(s.perturbation)}}},
        {"excluded_t", rep.excluded_t},
        {"failures", rep.failures},
        {"checks", checks_json(rep.checks)}};
    o.write("stability.json", meta.dump(2) + "\n");
  }
  report_checks(o.to_files() ? o.out : err, rep.checks);
  return rep.passed() ? kOk : kChecksFailed;
}

}  // namespace cli

/// Entry point of the cgo_stab tool. Returns the process exit status.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"CGO stability toolkit: forward DtN maps, CGO solutions, pointwise reconstruction and estimate checks",
               "cgo_stab"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path = "default";
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "config file, or 'default' for the built-in defaults");
  app.add_option("--out", out_dir, "output directory (default: CSV to stdout)");
  app.add_option("--threads", threads, "worker threads (default: $CGO_STAB_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the operator-norm probe set");

  auto* forward = app.add_subcommand("forward", "compute the DtN map and write the cache");
  auto* cgo = app.add_subcommand("cgo", "solve for mu and report iteration diagnostics");
  auto* reconstruct = app.add_subcommand("reconstruct", "pointwise reconstruction table");
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string which;
  verify->add_option("suite", which, "lemma1, lemma2, lemma3, lemma4 or alessandrini")
      ->required()
      ->check(CLI::IsMember({"lemma1", "lemma2", "lemma3", "lemma4", "alessandrini"}));
  auto* stability = app.add_subcommand("stability", "stability sweep over the perturbation scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  if (threads == 0) {
    threads = 1;
    if (const char* env = std::getenv("CGO_STAB_THREADS")) {
      try {
        threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        err << "error: CGO_STAB_THREADS must be a positive integer\n";
        return cli::kUsage;
      }
    }
  }

  harness::Settings settings;
  try {
    settings = harness::settings_from(Config::load(config_path, harness::kDefaultConfig));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return cli::kUsage;
  }

  const cli::Output o{out_dir, out};
  try {
    if (forward->parsed()) return cli::run_forward(settings, o, threads, err);
    if (cgo->parsed()) return cli::run_cgo(settings, o, err);
    if (reconstruct->parsed()) return cli::run_reconstruct(settings, o, err);
    if (verify->parsed()) return cli::run_verify(which, settings, o, seed, threads, err);
    if (stability->parsed()) return cli::run_stability(settings, o, threads, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return cli::kRuntime;
  }
  return cli::kUsage;
}

}  // namespace cgostab
