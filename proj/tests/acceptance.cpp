// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
//
//   acceptance            criteria 1-10
//   acceptance --long     additionally the h = 1/50, T = 200 partially open run
//                         (also enabled by SANDPILE_LONG=1)
//   acceptance --only N   a single criterion

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "random_states.hpp"
#include "sandpile/sandpile.hpp"

using namespace sandpile;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;
int only = 0;  // --only N runs a single criterion

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  if (only != 0 && only != id) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0.0 || secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %-28s %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              secs, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a[n] - b[n]));
  return d;
}

State2D extrude(const State1D& s, std::size_t m) {
  State2D out = State2D::zeros(Grid2D(m));
  for (std::size_t l = 0; l <= m; ++l)
    for (std::size_t j = 0; j <= m; ++j) out.u(j, l) = s.u[j];
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i) out.v(i, k) = s.v[i];
  return out;
}

// ---------------------------------------------------------------------------

Outcome well_balance_1d() {
  const std::vector<std::size_t> meshes{50, 100, 200, 400};
  const std::vector<double> published{1e-4, 3.49e-5, 8.72e-6, 2.18e-6};
  bool ok = true;
  double exact_worst = 0.0;
  for (SchemeKind k : {SchemeKind::FO, SchemeKind::SOTheta})
    for (const auto& r : wellbalance_experiment(k, Steady1DKind::FHalf, meshes)) {
      exact_worst = std::max({exact_worst, r.err_u, r.err_v});
      ok = ok && r.err_u <= 1e-13 && r.err_v <= 1e-13;
    }
  const auto so = wellbalance_experiment(SchemeKind::SO, Steady1DKind::FHalf, meshes);
  std::ostringstream d;
  d << "FO/SO-Theta max err " << fmt("%.2e", exact_worst) << "; SO v-err";
  for (std::size_t n = 0; n < so.size(); ++n) {
    d << ' ' << fmt("%.3e", so[n].err_v);
    const double ratio = so[n].err_v / published[n];
    ok = ok && ratio <= 3.0 && ratio >= 1.0 / 3.0;
    if (n > 0) {
      const double halving = so[n - 1].err_v / so[n].err_v;
      ok = ok && halving >= 3.5 && halving <= 4.5;
    }
  }
  return {ok, d.str()};
}

Outcome theorem41() {
  double dev_pub = 0.0, dev_re = 0.0;
  for (std::size_t m : {10, 20, 50})
    for (double theta : {0.25, 0.5})
      for (double lambda : {0.3, 0.45})
        for (const auto& r : t41_check(m, theta, lambda)) {
          dev_pub = std::max(dev_pub, std::abs(r.numeric - r.published));
          dev_re = std::max(dev_re, std::abs(r.numeric - *r.rederived));
        }
  return {dev_pub <= 1e-12, "max |numeric - published table| " + fmt("%.3e", dev_pub) +
                                "; vs re-derived table " + fmt("%.3e", dev_re)};
}

Outcome eoc_1d() {
  SchemeConfig base;
  base.lambda = 0.3;
  base.t_final = 1.3;
  base.theta = 0.5;
  const std::vector<std::size_t> meshes{40, 80, 160, 320, 640};
  const std::size_t reference = 6400;  // 4000 does not contain the 320 and 640 grids
  std::vector<std::vector<EocRow>> tables;
  bool ok = true;
  std::ostringstream d;
  for (SchemeKind k : {SchemeKind::FO, SchemeKind::SO, SchemeKind::SOTheta}) {
    SchemeConfig c = base;
    c.kind = k;
    tables.push_back(eoc_experiment_1d({c, Source1D::constant(0.5), meshes, reference, 0.5}, CflPolicy::Warn));
    const double lo = k == SchemeKind::FO ? 0.6 : 0.9;
    const double hi = k == SchemeKind::FO ? 0.95 : 1.2;
    d << to_string(k) << " u/v EOC";
    for (std::size_t n = 1; n < meshes.size(); ++n) {
      const auto& r = tables.back()[n];
      d << ' ' << fmt("%.2f", r.eoc_u.value_or(NAN)) << '/' << fmt("%.2f", r.eoc_v.value_or(NAN));
      ok = ok && r.eoc_u && r.eoc_v && *r.eoc_u >= lo && *r.eoc_u <= hi && *r.eoc_v >= lo && *r.eoc_v <= hi;
    }
    d << "; ";
  }
  double gap = 0.0;
  for (std::size_t n = 1; n < meshes.size(); ++n) {
    gap = std::max(gap, std::abs(tables[1][n].eoc_u.value_or(0) - tables[2][n].eoc_u.value_or(0)));
    gap = std::max(gap, std::abs(tables[1][n].eoc_v.value_or(0) - tables[2][n].eoc_v.value_or(0)));
  }
  d << "SO vs SO-Theta max EOC gap " << fmt("%.3f", gap);
  return {ok && gap <= 0.1, d.str()};
}

// The stability statement assumes both CFL conditions, so a trajectory is
// only followed while they hold at the start of each step.
Outcome theorem31() {
  std::mt19937_64 rng(2024);
  double worst_alpha = 0.0, worst_v = 0.0, worst_u_drop = 0.0;
  std::size_t checked = 0;
  for (SchemeKind k : {SchemeKind::FO, SchemeKind::SO, SchemeKind::SOTheta}) {
    SchemeConfig c;
    c.kind = k;
    c.lambda = 0.3;
    for (int n = 0; n < 100; ++n) {
      const Problem1D p(Grid1D(50), Source1D::constant(0.5), TableKind::Open);
      Solver1D s(p, c, fixtures::random_state_1d(p.grid(), rng, 1.0), CflPolicy::Warn);
      for (int step = 0; step < 50; ++step) {
        const std::vector<double> before = s.state().u;
        const StepReport r = s.step();
        if (!r.cfl1_ok || !r.cfl2_ok) break;
        ++checked;
        worst_alpha = std::max(worst_alpha, r.max_abs_alpha);
        worst_v = std::min(worst_v, r.min_v);
        for (std::size_t j = 0; j < before.size(); ++j)
          worst_u_drop = std::max(worst_u_drop, before[j] - s.state().u[j]);
      }
    }
  }
  const bool ok = worst_alpha <= 1.0 + 1e-12 && worst_v >= -1e-12 && worst_u_drop <= 1e-12;
  return {ok, std::to_string(checked) + "/15000 steps under CFL; max|alpha| " + fmt("%.15f", worst_alpha) +
                  ", min v " + fmt("%.2e", worst_v) + ", max u decrease " + fmt("%.2e", worst_u_drop)};
}

Outcome fo_so_coincidence() {
  std::mt19937_64 rng(5);
  int same = 0;
  const Problem1D p1(Grid1D(40), Source1D::constant(0.5), TableKind::Open);
  for (int n = 0; n < 10; ++n) {
    const State1D s = fixtures::random_state_1d(p1.grid(), rng, 1.0);
    const double dt = 0.3 * p1.grid().dx();
    same += rk_stage(p1, s, 0.0, std::vector<double>(40, 1.0), dt) == fo_step(p1, s, dt);
  }
  const Problem2D p2(Grid2D(16), SourceSpec2D{TableKind::Open, 0.5, {}});
  for (int n = 0; n < 5; ++n) {
    const State2D s = fixtures::random_state_2d(p2.grid(), rng, 1.0);
    const double dt = 0.3 * p2.grid().h();
    same += rk_stage_2d(p2, s, 0.0, nullptr, dt) == fo_step_2d(p2, s, dt);
  }
  return {same == 15, std::to_string(same) + "/15 bit-identical stages"};
}

Outcome eoc_2d() {
  SchemeConfig base;
  base.lambda = 0.35;
  base.t_final = 26.0;
  base.theta = 0.5;
  const std::vector<std::size_t> meshes{20, 40, 80};
  bool ok = true;
  std::ostringstream d;
  for (SchemeKind k : {SchemeKind::FO, SchemeKind::SO, SchemeKind::SOTheta}) {
    SchemeConfig c = base;
    c.kind = k;
    const auto rows = eoc_experiment_2d({c, 0.5, meshes}, CflPolicy::Warn);
    d << to_string(k) << " u/v EOC";
    for (std::size_t n = 1; n < rows.size(); ++n) {
      const double eu = rows[n].eoc_u.value_or(NAN), ev = rows[n].eoc_v.value_or(NAN);
      d << ' ' << fmt("%.3f", eu) << '/' << fmt("%.3f", ev);
      ok = ok && eu >= 0.9 && eu <= 1.1;
      if (k == SchemeKind::SOTheta) ok = ok && ev >= 1.5;
      if (k == SchemeKind::SO) ok = ok && ev <= 1.3;
    }
    d << "; ";
  }
  return {ok, d.str()};
}

Outcome well_balance_2d() {
  const Grid2D g(20);
  const Problem2D p(g, SourceSpec2D{TableKind::Open, 0.5, {}});
  const State2D s0 = sample_steady_2d_open(0.5, g);
  double theta_max = 0.0;
  const State2D s1 = so_step_2d(p, s0, 0.5, 0.35 * g.h(), true, &theta_max);
  const double du = max_abs_diff(s1.u.data(), s0.u.data());
  const double dv = max_abs_diff(s1.v.data(), s0.v.data());
  return {du <= 1e-12 && dv <= 1e-12,
          "max change u " + fmt("%.3e", du) + ", v " + fmt("%.3e", dv) + ", max Theta " + fmt("%.3e", theta_max)};
}

Outcome reduction() {
  const std::size_t m = 20;
  std::mt19937_64 rng(77);
  const Problem1D p1(Grid1D(m), Source1D::constant(0.5), TableKind::Open);
  const Problem2D p2(Grid2D(m), SourceSpec2D{TableKind::Open, 0.5, {}}, true);
  std::ostringstream d;
  bool ok = true;
  const State1D start = fixtures::random_state_1d(p1.grid(), rng, 1.0);
  for (SchemeKind k : {SchemeKind::FO, SchemeKind::SO, SchemeKind::SOTheta}) {
    SchemeConfig c;
    c.kind = k;
    c.lambda = 0.3;
    Solver1D a(p1, c, start);
    Solver2D b(p2, c, extrude(start, m));
    double dev = 0.0;
    for (int n = 0; n < 20; ++n) {
      a.step();
      b.step();
      for (std::size_t l = 0; l <= m; ++l)
        for (std::size_t j = 0; j <= m; ++j) dev = std::max(dev, std::abs(b.state().u(j, l) - a.state().u[j]));
      for (std::size_t k2 = 0; k2 < m; ++k2)
        for (std::size_t i = 0; i < m; ++i) dev = std::max(dev, std::abs(b.state().v(i, k2) - a.state().v[i]));
    }
    d << to_string(k) << ' ' << fmt("%.3e", dev) << "; ";
    ok = ok && dev <= 1e-12;
  }
  return {ok, "max row deviation " + d.str()};
}

// Each tabulated example row, compared exactly as listed.
Outcome flux_suite() {
  struct Row {
    std::string name;
    double got;
    double want;
    double tol;
  };
  std::vector<Row> rows{
      {"G(1,0.3,-1,0.2)", flux_G(1.0, 0.3, -1.0, 0.2), 0.0, 0.0},
      {"G(0,1,0,1)", flux_G(0.0, 1.0, 0.0, 1.0), -1.0, 0.0},
      {"G(0.5,2,-0.5,1)", flux_G(0.5, 2.0, -0.5, 1.0), -0.5, 0.0},
      {"H(-1,2,-0.5,1,0.3,0.4)", flux_H(-1.0, 2.0, -0.5, 1.0, 0.3, 0.4), 1.7, 1e-15},
      {"H(1,2,0.5,1,0.3,0.4)", flux_H(1.0, 2.0, 0.5, 1.0, 0.3, 0.4), -0.9, 1e-15},
      {"H(1,9,-1,9,0.3,0.5)", flux_H(1.0, 9.0, -1.0, 9.0, 0.3, 0.5), -0.4, 1e-15},
      {"H(-1,1,1,1,0.2,0.2)", flux_H(-1.0, 1.0, 1.0, 1.0, 0.2, 0.2), 0.8, 1e-15},
      {"S(1,3)", source_S(1.0, 3.0), 0.0, 0.0},
      {"S(0,1)", source_S(0.0, 1.0), -1.0, 0.0},
      {"S(0.5,2)", source_S(0.5, 2.0), -1.0, 0.0},
      {"minmod(1,2,3)", minmod(1.0, 2.0, 3.0), 1.0, 0.0},
      {"minmod(-1,2,3)", minmod(-1.0, 2.0, 3.0), 0.0, 0.0},
      {"minmod(-2,-3,-1)", minmod(-2.0, -3.0, -1.0), -1.0, 0.0},
      {"minmod(0,5,7)", minmod(0.0, 5.0, 7.0), 0.0, 0.0},
      {"slope(0,1,2;0.5)", limited_slope(0.0, 1.0, 2.0, 0.5), 1.0, 0.0},
      {"slope(0,1,0;0.5)", limited_slope(0.0, 1.0, 0.0, 0.5), 0.0, 0.0},
      {"slope(0,1,2;0)", limited_slope(0.0, 1.0, 2.0, 0.0), 0.0, 0.0},
      {"reconstruct right", reconstruct(1.0, 0.2, 1.0).right, 1.1, 1e-15},
      {"reconstruct left", reconstruct(1.0, 0.2, 1.0).left, 0.9, 1e-15},
      {"Theta(E=dx)", steady_indicator(0.01, 0.01), 0.5, 1e-15},
      {"Theta clamp 0.8+0.8", combine_theta(0.8, 0.8), 1.0, 0.0},
      {"steady_1d f1 u(0.25)", steady_1d(Steady1DKind::FUnit, 0.25).first, 0.25, 0.0},
      {"steady_1d f1 v(0.25)", steady_1d(Steady1DKind::FUnit, 0.25).second, 0.25, 0.0},
      {"steady_1d fh v(0)", steady_1d(Steady1DKind::FHalf, 0.0).second, 0.25, 0.0},
      {"steady_1d v(0.5)", steady_1d(Steady1DKind::FHalf, 0.5).second, 0.0, 0.0},
      {"partial u(0.25,0.4)", steady_2d_partial(1.0, 0.25, 0.4).u, 0.4, 1e-15},
      {"partial v(0.25,0.4)", *steady_2d_partial(1.0, 0.25, 0.4).v, 0.6, 1e-15},
      {"partial d(1,0)", partial_distance(1.0, 0.0), 0.5, 0.0},
      {"partial l(1,0)", partial_ray_length(1.0, 0.0), 0.5, 0.0},
      {"partial v(1,0)", *steady_2d_partial(1.0, 1.0, 0.0).v, 0.0, 1e-16},
      {"eoc(0.04,0.02)", *eoc(0.04, 0.02), 1.0, 1e-15},
      {"eoc(0.0662,0.0334)", *eoc(0.0662, 0.0334), 0.9868, 5e-5},
      {"eoc(0.0085,0.0052)", *eoc(0.0085, 0.0052), 0.7090, 5e-5},
      {"T41 K-2 row", theorem41_oracle(20, 0.5, 0.3)[7], 1.125e-3, 1e-15},
  };
  // Zero state with f = 0.5 on fine grids: indicator above 0.9 where the B
  // jumps dominate, read as every cell past the first two.
  for (std::size_t m : {100, 400}) {
    const Problem1D p(Grid1D(m), Source1D::constant(0.5), TableKind::Open);
    const auto th = theta_field_1d(p, State1D::zeros(p.grid()));
    double lowest = 1.0;
    for (std::size_t i = 2; i < m; ++i) lowest = std::min(lowest, th[i]);
    rows.push_back({"zero-state Theta>0.9 M=" + std::to_string(m), lowest > 0.9 ? 1.0 : lowest, 1.0, 0.0});
  }
  int bad = 0;
  std::string which;
  for (const Row& r : rows)
    if (!(std::abs(r.got - r.want) <= r.tol)) {
      ++bad;
      which += " " + r.name + "=" + fmt("%.6g", r.got) + " (table " + fmt("%.6g", r.want) + ")";
    }
  return {bad == 0, std::to_string(rows.size() - bad) + "/" + std::to_string(rows.size()) + " rows" +
                        (bad ? "; mismatched:" + which : "")};
}

Outcome partially_open(std::size_t m, double t_final) {
  const Grid2D g(m);
  const Problem2D p(g, SourceSpec2D{TableKind::PartiallyOpen, 0.5, {}});
  const State2D oracle = sample_steady_2d_partial(0.5, g);
  SchemeConfig c;
  c.kind = SchemeKind::SOTheta;
  c.lambda = 0.1;
  c.t_final = t_final;
  Solver2D s(p, c, State2D::zeros(g), CflPolicy::Warn);
  std::deque<double> v_errs;  // last 100 iterations, plus the state before them
  s.run([&](const StepReport&) {
    v_errs.push_back(error_norms(s.state(), oracle, g).v_l1);
    if (v_errs.size() > 101) v_errs.pop_front();
  });
  const ErrorNorms e = error_norms(s.state(), oracle, g);
  std::size_t rises = 0;
  for (std::size_t n = 1; n < v_errs.size(); ++n) rises += v_errs[n] > v_errs[n - 1];
  const bool ok = e.u_sup <= 0.1 && rises == 0 && v_errs.size() == 101;
  return {ok, "h=1/" + std::to_string(m) + " T=" + fmt("%g", t_final) + ": u sup-err " + fmt("%.4f", e.u_sup) +
                  ", v L1-err " + fmt("%.4e", e.v_l1) + ", rises in last " + std::to_string(v_errs.size() - 1) +
                  " iters: " + std::to_string(rises)};
}

}  // namespace

int main(int argc, char** argv) {
  bool long_run = false;
  for (int n = 1; n < argc; ++n) {
    const std::string a = argv[n];
    long_run = long_run || a == "--long";
    if (a == "--only" && n + 1 < argc) only = std::atoi(argv[++n]);
  }
  if (const char* env = std::getenv("SANDPILE_LONG")) long_run = long_run || std::string(env) == "1";

  criterion(1, "1D well-balance", 1.0, well_balance_1d);
  criterion(2, "closed-form one-step table", 1.0, theorem41);
  criterion(3, "1D EOC", 120.0, eoc_1d);
  criterion(4, "stability properties", 60.0, theorem31);
  criterion(5, "FO / theta=0 coincidence", 10.0, fo_so_coincidence);
  criterion(6, "2D EOC", 600.0, eoc_2d);
  criterion(7, "2D well-balance", 0.0, well_balance_2d);
  criterion(8, "dimensional reduction", 10.0, reduction);
  criterion(9, "flux/oracle example rows", 0.0, flux_suite);
  criterion(10, "partially open 2D", 300.0, [] { return partially_open(25, 50.0); });
  if (long_run) criterion(10, "partially open 2D (long)", 0.0, [] { return partially_open(50, 200.0); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
