#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "oracles.hpp"
#include "scheme1d.hpp"
#include "scheme2d.hpp"
#include "source.hpp"

namespace sandpile {

inline SchemeKind parse_scheme(const std::string& s) {
  if (s == "fo") return SchemeKind::FO;
  if (s == "so") return SchemeKind::SO;
  if (s == "so-theta") return SchemeKind::SOTheta;
  throw ConfigError("unknown scheme '" + s + "' (fo, so, so-theta)");
}

inline TableKind parse_table(const std::string& s) {
  if (s == "open") return TableKind::Open;
  if (s == "partial") return TableKind::PartiallyOpen;
  throw ConfigError("unknown table '" + s + "' (open, partial)");
}

inline CflPolicy parse_cfl_policy(const std::string& s) {
  if (s == "enforce") return CflPolicy::Enforce;
  if (s == "warn") return CflPolicy::Warn;
  throw ConfigError("unknown cfl policy '" + s + "' (enforce, warn)");
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("bad number for " + what + ": '" + s + "'");
  return x;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Source strings:
///   const:V                         f = V everywhere
///   pieces:V:a,b[;c,d...]           1D, f = V on the listed intervals
///   rects:V:x0,x1,y0,y1[;...]       2D, f = V on the listed rectangles
struct SourceArg {
  double value = 0.5;
  std::vector<std::vector<double>> boxes;
};

inline SourceArg parse_source(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() < 2) throw ConfigError("bad source '" + text + "'");
  SourceArg a;
  a.value = detail::parse_double(parts[1], "source value");
  if (a.value < 0.0) throw ConfigError("source must be nonnegative");
  if (parts[0] == "const") {
    if (parts.size() != 2) throw ConfigError("bad source '" + text + "'");
    return a;
  }
  if ((parts[0] != "pieces" && parts[0] != "rects") || parts.size() != 3)
    throw ConfigError("bad source '" + text + "'");
  const std::size_t arity = parts[0] == "pieces" ? 2 : 4;
  for (const auto& box : detail::split(parts[2], ';')) {
    std::vector<double> nums;
    for (const auto& n : detail::split(box, ',')) nums.push_back(detail::parse_double(n, "source box"));
    if (nums.size() != arity) throw ConfigError("bad source box '" + box + "'");
    a.boxes.push_back(nums);
  }
  return a;
}

/// Everything a single run needs. Field names double as config-file keys.
struct RunConfig {
  int dim = 1;
  SchemeKind scheme = SchemeKind::SOTheta;
  std::size_t M = 100;
  double lambda = 0.45;
  double theta = 0.5;
  std::optional<double> t_final;
  std::optional<std::size_t> steps;
  TableKind table = TableKind::Open;
  std::string source = "const:0.5";
  std::string oracle;  // "", f_unit, f_half, open2d, partial2d
  std::filesystem::path out = "out";
  bool history = false;
  CflPolicy cfl = CflPolicy::Enforce;

  SchemeConfig scheme_config() const {
    SchemeConfig c;
    c.kind = scheme;
    c.theta = theta;
    c.lambda = lambda;
    c.t_final = t_final.value_or(0.0);
    c.table = table;
    return c;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
    if (M < 4) throw ConfigError("M must be at least 4");
    if (t_final && steps) throw ConfigError("give either t-final or steps, not both");
    if (!t_final && !steps) throw ConfigError("one of t-final or steps is required");
    scheme_config().validate();
    parse_source(source);
  }
};

/// Set one option from its textual form (config file or command line).
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "dim") {
    const double d = detail::parse_double(value, key);
    if (d != 1.0 && d != 2.0) throw ConfigError("dim must be 1 or 2");
    c.dim = static_cast<int>(d);
  } else if (key == "scheme") {
    c.scheme = parse_scheme(value);
  } else if (key == "M") {
    const double m = detail::parse_double(value, key);
    if (m < 0 || m != std::floor(m)) throw ConfigError("M must be a positive integer");
    c.M = static_cast<std::size_t>(m);
  } else if (key == "lambda") {
    c.lambda = detail::parse_double(value, key);
  } else if (key == "theta") {
    c.theta = detail::parse_double(value, key);
  } else if (key == "t-final") {
    c.t_final = detail::parse_double(value, key);
  } else if (key == "steps") {
    const double n = detail::parse_double(value, key);
    if (n < 0 || n != std::floor(n)) throw ConfigError("steps must be a nonnegative integer");
    c.steps = static_cast<std::size_t>(n);
  } else if (key == "table") {
    c.table = parse_table(value);
  } else if (key == "source") {
    c.source = value;
  } else if (key == "oracle") {
    c.oracle = value;
  } else if (key == "out") {
    c.out = value;
  } else if (key == "history") {
    c.history = value == "1" || value == "true" || value == "yes";
  } else if (key == "cfl-policy") {
    c.cfl = parse_cfl_policy(value);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

/// key = value lines; '#' starts a comment.
inline void load_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline Source1D make_source_1d(const SourceArg& a) {
  Source1D s = Source1D::constant(a.value);
  for (const auto& b : a.boxes) {
    if (b.size() != 2) throw ConfigError("1D source needs pieces:V:a,b");
    s.pieces.push_back({b[0], b[1]});
  }
  return s;
}

inline SourceSpec2D make_source_2d(const SourceArg& a, TableKind table) {
  SourceSpec2D s{table, a.value, {}};
  for (const auto& b : a.boxes) {
    if (b.size() != 4) throw ConfigError("2D source needs rects:V:x0,x1,y0,y1");
    s.rects.push_back({b[0], b[1], b[2], b[3]});
  }
  return s;
}

inline std::optional<State1D> oracle_state_1d(const std::string& name, const Source1D& src,
                                              TableKind table, const Grid1D& grid) {
  if (name.empty()) return std::nullopt;
  Steady1DKind kind;
  if (name == "f_unit") kind = Steady1DKind::FUnit;
  else if (name == "f_half") kind = Steady1DKind::FHalf;
  else throw ConfigError("unknown 1D oracle '" + name + "' (f_unit, f_half)");
  if (table != TableKind::Open || !src.pieces.empty() || src.value != steady_1d_source(kind))
    throw ConfigError("oracle " + name + " needs an open table with constant source " +
                      fmt17(steady_1d_source(kind)));
  return sample_steady_1d(kind, grid);
}

inline State2D sample_steady_2d_open(double f, const Grid2D& g) {
  State2D s = State2D::zeros(g);
  const std::size_t m = g.cells();
  for (std::size_t l = 0; l <= m; ++l)
    for (std::size_t j = 0; j <= m; ++j) s.u(j, l) = steady_2d_open(f, g.vertex(j), g.vertex(l)).first;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      s.v(i, k) = steady_2d_open(f, g.center(static_cast<std::ptrdiff_t>(i + 1)),
                                 g.center(static_cast<std::ptrdiff_t>(k + 1))).second;
  return s;
}

/// Partially open oracle on the grid; v is NaN where undefined.
inline State2D sample_steady_2d_partial(double f, const Grid2D& g) {
  State2D s = State2D::zeros(g);
  const std::size_t m = g.cells();
  for (std::size_t l = 0; l <= m; ++l)
    for (std::size_t j = 0; j <= m; ++j) s.u(j, l) = steady_2d_partial(f, g.vertex(j), g.vertex(l)).u;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      s.v(i, k) = steady_2d_partial(f, g.center(static_cast<std::ptrdiff_t>(i + 1)),
                                    g.center(static_cast<std::ptrdiff_t>(k + 1)))
                      .v.value_or(std::nan(""));
  return s;
}

inline std::optional<State2D> oracle_state_2d(const std::string& name, const SourceSpec2D& src,
                                              const Grid2D& grid) {
  if (name.empty()) return std::nullopt;
  if (!src.rects.empty()) throw ConfigError("2D oracles need a constant source");
  if (name == "open2d") {
    if (src.table != TableKind::Open) throw ConfigError("oracle open2d needs the open table");
    return sample_steady_2d_open(src.value, grid);
  }
  if (name == "partial2d") {
    if (src.table != TableKind::PartiallyOpen)
      throw ConfigError("oracle partial2d needs the partially open table");
    return sample_steady_2d_partial(src.value, grid);
  }
  throw ConfigError("unknown 2D oracle '" + name + "' (open2d, partial2d)");
}

struct RunResult {
  std::size_t steps = 0;
  double t = 0.0;
  std::optional<ErrorNorms> errors;
  std::string status = "ok";
  std::string message;
};

namespace detail {

class HistoryWriter {
 public:
  HistoryWriter(bool enabled, const std::filesystem::path& dir) {
    if (enabled) out_ = open_csv(dir / "history.csv", "iter,t,err_u_sup,err_v_l1,max_v,theta_max");
  }
  void row(std::size_t iter, double t, const std::optional<ErrorNorms>& e, const StepReport& r) {
    if (!out_.is_open()) return;
    out_ << iter << ',' << fmt17(t) << ',' << (e ? fmt17(e->u_sup) : "") << ','
         << (e ? fmt17(e->v_l1) : "") << ',' << fmt17(r.max_v) << ',' << fmt17(r.theta_max) << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_report(const RunConfig& c, const RunResult& r) {
  nlohmann::ordered_json j;
  j["dim"] = c.dim;
  j["scheme"] = to_string(c.scheme);
  j["M"] = c.M;
  j["lambda"] = c.lambda;
  j["theta"] = c.theta;
  j["table"] = to_string(c.table);
  j["source"] = c.source;
  j["steps"] = r.steps;
  j["t"] = r.t;
  j["status"] = r.status;
  if (!r.message.empty()) j["message"] = r.message;
  if (r.errors) {
    j["oracle"] = c.oracle;
    j["err_u_sup"] = r.errors->u_sup;
    j["err_v_l1"] = r.errors->v_l1;
  }
  std::filesystem::create_directories(c.out);
  std::ofstream(c.out / "report.json") << j.dump(2) << '\n';
}

/// Drive any solver with the run's stopping rule, recording history.
template <class Solver, class ErrorFn>
RunResult drive(Solver& solver, const RunConfig& c, ErrorFn&& errors) {
  HistoryWriter history(c.history, c.out);
  RunResult res;
  auto on_step = [&](const StepReport& r) {
    history.row(solver.steps(), solver.time(), c.history ? errors() : std::nullopt, r);
  };
  try {
    if (c.steps) {
      for (std::size_t n = 0; n < *c.steps; ++n) on_step(solver.step());
    } else {
      solver.run(on_step);
    }
  } catch (const CflError& e) {
    res.status = "cfl_halt";
    res.message = e.what();
    res.steps = solver.steps();
    res.t = solver.time();
    write_report(c, res);
    throw;
  }
  res.steps = solver.steps();
  res.t = solver.time();
  res.errors = errors();
  return res;
}

}  // namespace detail

/// Execute one run, writing u.csv, v.csv, report.json and optionally
/// history.csv into `c.out`.
inline RunResult run(const RunConfig& c) {
  c.validate();
  const SourceArg src = parse_source(c.source);
  RunResult res;
  if (c.dim == 1) {
    const Grid1D grid(c.M);
    const Source1D s1 = make_source_1d(src);
    const auto oracle = oracle_state_1d(c.oracle, s1, c.table, grid);
    Solver1D solver(Problem1D(grid, s1, c.table), c.scheme_config(), State1D::zeros(grid), c.cfl);
    res = detail::drive(solver, c, [&]() -> std::optional<ErrorNorms> {
      if (!oracle) return std::nullopt;
      return error_norms(solver.state(), *oracle, grid);
    });
    write_u_1d(c.out / "u.csv", solver.state(), grid);
    write_v_1d(c.out / "v.csv", solver.state(), grid);
  } else {
    const Grid2D grid(c.M);
    const SourceSpec2D s2 = make_source_2d(src, c.table);
    const auto oracle = oracle_state_2d(c.oracle, s2, grid);
    Solver2D solver(Problem2D(grid, s2), c.scheme_config(), State2D::zeros(grid), c.cfl);
    res = detail::drive(solver, c, [&]() -> std::optional<ErrorNorms> {
      if (!oracle) return std::nullopt;
      return error_norms(solver.state(), *oracle, grid);
    });
    write_u_2d(c.out / "u.csv", solver.state(), grid);
    write_v_2d(c.out / "v.csv", solver.state(), grid);
  }
  detail::write_report(c, res);
  return res;
}

// ---------------------------------------------------------------------------
// Experiments

/// Restriction of a fine 1D state onto a coarser nested grid: u by taking
/// every r-th vertex, v by averaging groups of r cells.
inline State1D restrict_1d(const State1D& fine, std::size_t coarse_cells) {
  const std::size_t fine_cells = fine.v.size();
  if (coarse_cells == 0 || fine_cells % coarse_cells != 0)
    throw ConfigError("mesh " + std::to_string(coarse_cells) + " is not nested in reference mesh " +
                      std::to_string(fine_cells));
  const std::size_t r = fine_cells / coarse_cells;
  State1D out{std::vector<double>(coarse_cells + 1), std::vector<double>(coarse_cells, 0.0)};
  for (std::size_t j = 0; j <= coarse_cells; ++j) out.u[j] = fine.u[j * r];
  for (std::size_t i = 0; i < coarse_cells; ++i) {
    for (std::size_t q = 0; q < r; ++q) out.v[i] += fine.v[i * r + q];
    out.v[i] /= static_cast<double>(r);
  }
  return out;
}

/// Fill the EOC columns of consecutive rows.
inline void fill_eoc(std::vector<EocRow>& rows) {
  for (std::size_t n = 1; n < rows.size(); ++n) {
    rows[n].eoc_u = eoc(rows[n - 1].err_u, rows[n].err_u);
    rows[n].eoc_v = eoc(rows[n - 1].err_v, rows[n].err_v);
  }
}

struct Eoc1DConfig {
  SchemeConfig scheme;               // kind, theta, lambda, t_final (table must be open)
  Source1D source = Source1D::constant(0.5);
  std::vector<std::size_t> meshes;   // cell counts, coarse to fine
  std::size_t reference_cells = 0;  // SO run on this mesh serves as reference
  double reference_theta = 0.5;
};

inline State1D solve_1d(const Problem1D& p, const SchemeConfig& c, CflPolicy policy) {
  Solver1D s(p, c, State1D::zeros(p.grid()), policy);
  s.run();
  return s.state();
}

/// EOC against a fine-mesh SO reference. Meshes must divide the reference.
inline std::vector<EocRow> eoc_experiment_1d(const Eoc1DConfig& c,
                                             CflPolicy policy = CflPolicy::Enforce) {
  for (std::size_t m : c.meshes)
    if (m == 0 || c.reference_cells % m != 0)
      throw ConfigError("mesh " + std::to_string(m) + " is not nested in reference mesh " +
                        std::to_string(c.reference_cells));
  SchemeConfig ref_cfg = c.scheme;
  ref_cfg.kind = SchemeKind::SO;
  ref_cfg.theta = c.reference_theta;
  const Grid1D ref_grid(c.reference_cells);
  const State1D ref = solve_1d(Problem1D(ref_grid, c.source, TableKind::Open), ref_cfg, policy);

  std::vector<EocRow> rows;
  for (std::size_t m : c.meshes) {
    const Grid1D g(m);
    const State1D s = solve_1d(Problem1D(g, c.source, TableKind::Open), c.scheme, policy);
    const ErrorNorms e = error_norms(s, restrict_1d(ref, m), g);
    rows.push_back({g.dx(), e.u_sup, std::nullopt, e.v_l1, std::nullopt});
  }
  fill_eoc(rows);
  return rows;
}

struct Eoc2DConfig {
  SchemeConfig scheme;
  double source_value = 0.5;
  std::vector<std::size_t> meshes;
};

/// EOC against the exact open-table pyramid.
inline std::vector<EocRow> eoc_experiment_2d(const Eoc2DConfig& c,
                                             CflPolicy policy = CflPolicy::Enforce) {
  std::vector<EocRow> rows;
  for (std::size_t m : c.meshes) {
    const Grid2D g(m);
    Solver2D s(Problem2D(g, SourceSpec2D{TableKind::Open, c.source_value, {}}), c.scheme,
               State2D::zeros(g), policy);
    s.run();
    const ErrorNorms e = error_norms(s.state(), sample_steady_2d_open(c.source_value, g), g);
    rows.push_back({g.h(), e.u_sup, std::nullopt, e.v_l1, std::nullopt});
  }
  fill_eoc(rows);
  return rows;
}

struct WellBalanceRow {
  double dx;
  double err_u;
  double err_v;
};

/// One step from the sampled steady state of an open table with constant f.
inline std::vector<WellBalanceRow> wellbalance_experiment(SchemeKind kind, Steady1DKind oracle,
                                                          const std::vector<std::size_t>& meshes,
                                                          double lambda = 0.45, double theta = 0.5) {
  std::vector<WellBalanceRow> rows;
  for (std::size_t m : meshes) {
    const Grid1D g(m);
    const Problem1D p(g, Source1D::constant(steady_1d_source(oracle)), TableKind::Open);
    const State1D s0 = sample_steady_1d(oracle, g);
    const double dt = lambda * g.dx();
    State1D s1;
    switch (kind) {
      case SchemeKind::FO: s1 = fo_step(p, s0, dt); break;
      case SchemeKind::SO: s1 = so_step(p, s0, theta, dt, false); break;
      case SchemeKind::SOTheta: s1 = so_step(p, s0, theta, dt, true); break;
    }
    const ErrorNorms e = error_norms(s1, s0, g);
    rows.push_back({g.dx(), e.u_sup, e.v_l1});
  }
  return rows;
}

struct T41Row1 {
  std::size_t i;
  double numeric;
  double published;
  std::optional<double> rederived;
};

/// Non-adaptive SO step from the f = 1 steady state versus the closed forms.
inline std::vector<T41Row1> t41_check(std::size_t cells, double theta, double lambda) {
  const Grid1D g(cells);
  const Problem1D p(g, Source1D::constant(1.0), TableKind::Open);
  const State1D s0 = sample_steady_1d(Steady1DKind::FUnit, g);
  const State1D s1 = so_step(p, s0, theta, lambda * g.dx(), false);
  const auto published = theorem41_oracle(cells, theta, lambda);
  std::optional<std::vector<double>> rederived;
  if (cells >= 10) rederived = theorem41_rederived(cells, theta, lambda);
  std::vector<T41Row1> rows;
  for (std::size_t i = 0; i < cells; ++i)
    rows.push_back({i + 1, s1.v[i] - s0.v[i], published[i],
                    rederived ? std::optional<double>((*rederived)[i]) : std::nullopt});
  return rows;
}

}  // namespace sandpile
