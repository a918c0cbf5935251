// Command-line front end for the sandpile solvers.
//
//   sandpile run --dim 1 --scheme so-theta --M 100 --t-final 450 --oracle f_half
//   sandpile eoc --dim 2 --scheme so-theta --meshes 20,40,80 --t-final 26 --lambda 0.35
//   sandpile wellbalance --scheme so --meshes 50,100,200,400
//   sandpile t41-check --M 20 --theta 0.5 --lambda 0.3
//
// Exit status: 0 success, 2 configuration error, 3 CFL halt.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sandpile/sandpile.hpp"

namespace {

using namespace sandpile;

std::vector<std::size_t> parse_meshes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : detail::split(text, ',')) {
    const double m = detail::parse_double(detail::trim(item), "meshes");
    if (m < 4 || m != static_cast<double>(static_cast<std::size_t>(m)))
      throw ConfigError("mesh cell counts must be integers >= 4");
    out.push_back(static_cast<std::size_t>(m));
  }
  if (out.empty()) throw ConfigError("no meshes given");
  return out;
}

void print_eoc(const std::vector<EocRow>& rows) {
  std::printf("%-12s %-12s %-8s %-12s %-8s\n", "h", "err_u", "eoc_u", "err_v", "eoc_v");
  for (const auto& r : rows) {
    auto e = [](const std::optional<double>& x) { return x ? fmt17(*x).substr(0, 6) : std::string("-"); };
    std::printf("%-12.6g %-12.4e %-8s %-12.4e %-8s\n", r.h, r.err_u, e(r.eoc_u).c_str(), r.err_v,
                e(r.eoc_v).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume solvers for the two-layer sandpile model"};
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Run one simulation and write CSV output");
  std::map<std::string, std::string> flags;
  const std::vector<std::pair<std::string, std::string>> run_flags = {
      {"dim", "1 or 2"},
      {"scheme", "fo | so | so-theta"},
      {"M", "cells per axis"},
      {"lambda", "dt/dx"},
      {"theta", "limiter parameter in [0,1]"},
      {"t-final", "final time"},
      {"steps", "number of steps (instead of t-final)"},
      {"table", "open | partial"},
      {"source", "const:V | pieces:V:a,b;... | rects:V:x0,x1,y0,y1;..."},
      {"oracle", "f_unit | f_half | open2d | partial2d"},
      {"out", "output directory"},
      {"cfl-policy", "enforce | warn"},
  };
  for (const auto& [name, help] : run_flags) run_cmd->add_option("--" + name, flags[name], help);
  bool history = false;
  run_cmd->add_flag("--history", history, "write history.csv with per-step errors");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "key = value file; flags override it");

  // eoc ---------------------------------------------------------------------
  auto* eoc_cmd = app.add_subcommand("eoc", "Experimental order of convergence table");
  int eoc_dim = 1;
  std::string eoc_scheme = "so-theta", eoc_meshes, eoc_out;
  double eoc_lambda = 0.3, eoc_theta = 0.5, eoc_t = 1.3, eoc_f = 0.5;
  std::size_t eoc_ref = 6400;
  eoc_cmd->add_option("--dim", eoc_dim, "1 or 2")->check(CLI::IsMember({1, 2}));
  eoc_cmd->add_option("--scheme", eoc_scheme, "fo | so | so-theta");
  eoc_cmd->add_option("--meshes", eoc_meshes, "comma-separated cell counts")->required();
  eoc_cmd->add_option("--lambda", eoc_lambda, "dt/dx");
  eoc_cmd->add_option("--theta", eoc_theta, "limiter parameter");
  eoc_cmd->add_option("--t-final", eoc_t, "final time");
  eoc_cmd->add_option("--source", eoc_f, "constant source value");
  eoc_cmd->add_option("--reference", eoc_ref, "1D: cells of the SO reference run");
  eoc_cmd->add_option("--out", eoc_out, "CSV file for the table");

  // wellbalance -------------------------------------------------------------
  auto* wb_cmd = app.add_subcommand("wellbalance", "One step from the exact 1D steady state");
  std::string wb_scheme = "so-theta", wb_meshes = "50,100,200,400", wb_oracle = "f_half", wb_out;
  double wb_lambda = 0.45, wb_theta = 0.5;
  wb_cmd->add_option("--scheme", wb_scheme, "fo | so | so-theta");
  wb_cmd->add_option("--meshes", wb_meshes, "comma-separated cell counts");
  wb_cmd->add_option("--oracle", wb_oracle, "f_unit | f_half");
  wb_cmd->add_option("--lambda", wb_lambda, "dt/dx");
  wb_cmd->add_option("--theta", wb_theta, "limiter parameter");
  wb_cmd->add_option("--out", wb_out, "CSV file for the table");

  // t41-check ---------------------------------------------------------------
  auto* t41_cmd = app.add_subcommand("t41-check", "Compare one SO step with the closed-form deviations");
  std::size_t t41_m = 20;
  double t41_theta = 0.5, t41_lambda = 0.3;
  std::string t41_out;
  t41_cmd->add_option("--M", t41_m, "cells (even)");
  t41_cmd->add_option("--theta", t41_theta, "limiter parameter");
  t41_cmd->add_option("--lambda", t41_lambda, "dt/dx");
  t41_cmd->add_option("--out", t41_out, "CSV file for the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      RunConfig cfg;
      if (!config_path.empty()) load_config_file(cfg, config_path);
      for (const auto& [name, help] : run_flags)
        if (run_cmd->count("--" + name) > 0) apply_setting(cfg, name, flags[name]);
      if (history) cfg.history = true;
      const RunResult r = run(cfg);
      std::printf("steps %zu  t %.17g\n", r.steps, r.t);
      if (r.errors) std::printf("err_u_sup %.6e  err_v_l1 %.6e\n", r.errors->u_sup, r.errors->v_l1);
    } else if (*eoc_cmd) {
      SchemeConfig sc;
      sc.kind = parse_scheme(eoc_scheme);
      sc.lambda = eoc_lambda;
      sc.theta = eoc_theta;
      sc.t_final = eoc_t;
      sc.validate();
      std::vector<EocRow> rows;
      if (eoc_dim == 1) {
        Eoc1DConfig c{sc, Source1D::constant(eoc_f), parse_meshes(eoc_meshes), eoc_ref, eoc_theta};
        rows = eoc_experiment_1d(c);
      } else {
        rows = eoc_experiment_2d({sc, eoc_f, parse_meshes(eoc_meshes)});
      }
      print_eoc(rows);
      if (!eoc_out.empty()) write_eoc(eoc_out, rows);
    } else if (*wb_cmd) {
      Steady1DKind kind;
      if (wb_oracle == "f_unit") kind = Steady1DKind::FUnit;
      else if (wb_oracle == "f_half") kind = Steady1DKind::FHalf;
      else throw ConfigError("unknown oracle '" + wb_oracle + "'");
      const auto rows = wellbalance_experiment(parse_scheme(wb_scheme), kind, parse_meshes(wb_meshes),
                                               wb_lambda, wb_theta);
      std::printf("%-10s %-12s %-12s\n", "dx", "err_u", "err_v");
      for (const auto& r : rows) std::printf("%-10g %-12.4e %-12.4e\n", r.dx, r.err_u, r.err_v);
      if (!wb_out.empty()) {
        auto out = open_csv(wb_out, "dx,err_u,err_v");
        for (const auto& r : rows) out << fmt17(r.dx) << ',' << fmt17(r.err_u) << ',' << fmt17(r.err_v) << '\n';
      }
    } else if (*t41_cmd) {
      const auto rows = t41_check(t41_m, t41_theta, t41_lambda);
      double dev_pub = 0.0, dev_re = 0.0;
      std::printf("%-5s %-14s %-14s %-14s\n", "i", "numeric", "published", "rederived");
      for (const auto& r : rows) {
        std::printf("%-5zu %-+14.6e %-+14.6e %-14s\n", r.i, r.numeric, r.published,
                    r.rederived ? fmt17(*r.rederived).substr(0, 13).c_str() : "-");
        dev_pub = std::max(dev_pub, std::abs(r.numeric - r.published));
        if (r.rederived) dev_re = std::max(dev_re, std::abs(r.numeric - *r.rederived));
      }
      std::printf("max |numeric - published| = %.3e\nmax |numeric - rederived| = %.3e\n", dev_pub, dev_re);
      if (!t41_out.empty()) {
        auto out = open_csv(t41_out, "i,numeric,published,rederived");
        for (const auto& r : rows)
          out << r.i << ',' << fmt17(r.numeric) << ',' << fmt17(r.published) << ',' << fmt17(r.rederived) << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CflError& e) {
    std::cerr << "halted: " << e.what() << '\n';
    return kExitCfl;
  }
  return kExitOk;
}
