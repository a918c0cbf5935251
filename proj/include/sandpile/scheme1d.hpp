#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "flux.hpp"
#include "grid.hpp"
#include "limiters.hpp"
#include "source.hpp"

namespace sandpile {

/// How a violated CFL condition is handled: refuse the step, or record it in
/// the step report and continue (used to reproduce runs beyond the
/// sufficient stability bounds).
enum class CflPolicy { Enforce, Warn };

struct StepReport {
  double dt = 0.0;
  double max_v = 0.0;  // before the step
  bool cfl1_ok = true; // lambda * max v <= 1/2
  bool cfl2_ok = true; // lambda <= 1/2 - dt
  double max_abs_alpha = 0.0;  // after the step
  double min_v = 0.0;          // after the step
  double theta_max = 0.0;      // largest steady-state indicator used
};

inline bool cfl1_holds(double lambda, double max_v) { return lambda * max_v <= 0.5; }
inline bool cfl2_holds(double lambda, double dt) { return lambda <= 0.5 - dt; }

inline void enforce_cfl(const StepReport& r, double lambda, CflPolicy policy) {
  if (policy == CflPolicy::Warn) return;
  if (!r.cfl1_ok) {
    std::ostringstream msg;
    msg << "CFL1 violated: lambda*max(v) = " << lambda * r.max_v << " > 1/2";
    throw CflError("CFL1", msg.str());
  }
  if (!r.cfl2_ok) {
    std::ostringstream msg;
    msg << "CFL2 violated: lambda = " << lambda << " > 1/2 - dt = " << 0.5 - r.dt;
    throw CflError("CFL2", msg.str());
  }
}

/// Everything about a 1D problem that stays fixed during a run.
class Problem1D {
 public:
  Problem1D(Grid1D grid, Source1D source, TableKind table)
      : grid_(grid), source_(std::move(source)), table_(table) {
    b_ = build_B_1d(source_, grid_);
    const Interval hull = source_.support();
    if (table_ == TableKind::PartiallyOpen && hull.lo > hull.hi)
      throw ConfigError("partially open table needs a source with nonempty support D_f");
    support_reaches_wall_ = hull.hi >= 1.0;
  }

  const Grid1D& grid() const noexcept { return grid_; }
  const Source1D& source() const noexcept { return source_; }
  TableKind table() const noexcept { return table_; }
  /// B at cell centers, index 0..M+1 (ghost centers at both ends).
  std::span<const double> B() const noexcept { return b_; }
  /// D_f = [X1, X2] with X2 = 1.
  bool support_reaches_wall() const noexcept { return support_reaches_wall_; }

 private:
  Grid1D grid_;
  Source1D source_;
  TableKind table_;
  std::vector<double> b_;
  bool support_reaches_wall_ = false;
};

namespace detail {

inline double max_of(std::span<const double> a) {
  return a.empty() ? 0.0 : *std::max_element(a.begin(), a.end());
}

inline double min_of(std::span<const double> a) {
  return a.empty() ? 0.0 : *std::min_element(a.begin(), a.end());
}

inline double max_abs_of(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Flux through the left (x = 0, always open) end of the table.
inline double left_boundary_flux_1d(const Problem1D& p, double alpha1, double v1) {
  return -alpha1 * v1 - p.B()[1];
}

/// Flux through the right end: open table lets sand leave; a wall only
/// passes the source primitive when the slope points into it.
inline double right_boundary_flux_1d(const Problem1D& p, double alpha_m, double v_m) {
  const std::size_t m = p.grid().cells();
  if (p.table() == TableKind::Open || alpha_m <= 0.0) return -alpha_m * v_m - p.B()[m];
  return -p.B()[m + 1];
}

/// Boundary values of u after a stage. `u_in` is the stage input and
/// `alpha_wall` the slope used for extrapolation at a wall reached by the
/// source (alpha_{M-1} for FO, alpha_{M-1/2,L} for the reconstructed scheme).
inline void apply_bc_1d(const Problem1D& p, std::span<const double> u_in, double alpha_wall,
                        std::span<double> u_out) {
  const std::size_t m = p.grid().cells();
  u_out[0] = 0.0;
  if (p.table() == TableKind::Open) {
    u_out[m] = 0.0;
  } else if (!p.support_reaches_wall()) {
    u_out[m] = u_in[m - 1];
  } else {
    u_out[m] = u_in[m - 1] + p.grid().dx() * std::max(alpha_wall, 0.0);
  }
}

/// First-order fluxes from unreconstructed cell values.
/// G[j] at vertex j (interior j = 1..M-1; ends are 0), H[j] at interface j = 0..M.
struct Fluxes1D {
  std::vector<double> G;
  std::vector<double> H;
};

inline Fluxes1D first_order_fluxes(const Problem1D& p, std::span<const double> alpha,
                                   std::span<const double> v) {
  const std::size_t m = p.grid().cells();
  const auto B = p.B();
  Fluxes1D f{std::vector<double>(m + 1, 0.0), std::vector<double>(m + 1, 0.0)};
  for (std::size_t j = 1; j < m; ++j) {
    // interface between cells j and j+1 (1-based), i.e. 0-based j-1 and j
    f.G[j] = flux_G(alpha[j - 1], v[j - 1], alpha[j], v[j]);
    f.H[j] = flux_H(alpha[j - 1], v[j - 1], alpha[j], v[j], B[j], B[j + 1]);
  }
  f.H[0] = left_boundary_flux_1d(p, alpha[0], v[0]);
  f.H[m] = right_boundary_flux_1d(p, alpha[m - 1], v[m - 1]);
  return f;
}

/// Residuals E_i = E_{i-1/2} + E_{i+1/2} with
/// E_{j} = sqrt(G_j^2 + (H_j - H_{j-1})^2). At the left end no cell lies
/// outside the table so E_{1/2} = 0; G vanishes on the end vertices, whose u
/// is prescribed.
inline std::vector<double> residual_1d(const Problem1D& p, const State1D& s) {
  const std::size_t m = p.grid().cells();
  const auto alpha = derive_alpha_1d(s, p.grid());
  const Fluxes1D f = first_order_fluxes(p, alpha, s.v);
  std::vector<double> e_vertex(m + 1, 0.0);
  for (std::size_t j = 1; j <= m; ++j) {
    const double jump = f.H[j] - f.H[j - 1];
    e_vertex[j] = std::sqrt(f.G[j] * f.G[j] + jump * jump);
  }
  std::vector<double> e(m);
  for (std::size_t i = 0; i < m; ++i) e[i] = e_vertex[i] + e_vertex[i + 1];
  return e;
}

/// Theta_i = E_i^2 / (E_i^2 + dx^2).
inline std::vector<double> theta_field_1d(const Problem1D& p, const State1D& s) {
  auto e = residual_1d(p, s);
  const double dx = p.grid().dx();
  for (double& x : e) x = steady_indicator(x, dx);
  return e;
}

/// One forward-Euler step of the first-order scheme.
inline State1D fo_step(const Problem1D& p, const State1D& s, double dt) {
  const Grid1D& g = p.grid();
  check_dimensions(s, g);
  const std::size_t m = g.cells();
  const double lambda = dt / g.dx();
  const auto alpha = derive_alpha_1d(s, g);
  const Fluxes1D f = first_order_fluxes(p, alpha, s.v);

  State1D out = State1D::zeros(g);
  for (std::size_t j = 1; j < m; ++j) out.u[j] = s.u[j] - dt * f.G[j];
  apply_bc_1d(p, s.u, m >= 2 ? alpha[m - 2] : 0.0, out.u);
  for (std::size_t i = 0; i < m; ++i)
    out.v[i] = s.v[i] - lambda * (f.H[i + 1] - f.H[i]) + dt * source_S(alpha[i], s.v[i]);
  return out;
}

/// One forward-Euler stage of the MUSCL scheme. Traces of alpha, v and B come
/// from limited slopes scaled per cell by `scale` (all ones for plain SO,
/// Theta for the adaptive scheme); the first and last cells are not
/// reconstructed.
inline State1D rk_stage(const Problem1D& p, const State1D& s, double theta,
                        std::span<const double> scale, double dt) {
  const Grid1D& g = p.grid();
  check_dimensions(s, g);
  const std::size_t m = g.cells();
  const double lambda = dt / g.dx();
  const auto B = p.B();
  const auto alpha = derive_alpha_1d(s, g);
  const std::span<const double> b_cells = B.subspan(1, m);

  const auto d_alpha = line_slopes(alpha, theta);
  const auto d_v = line_slopes(s.v, theta);
  const auto d_b = line_slopes(b_cells, theta);

  std::vector<CellTraces<double>> ta(m), tv(m), tb(m);
  for (std::size_t i = 0; i < m; ++i) {
    ta[i] = reconstruct(alpha[i], d_alpha[i], scale[i]);
    tv[i] = reconstruct(s.v[i], d_v[i], scale[i]);
    tb[i] = reconstruct(b_cells[i], d_b[i], scale[i]);
  }

  std::vector<double> H(m + 1);
  State1D out = State1D::zeros(g);
  for (std::size_t j = 1; j < m; ++j) {
    const auto& l = ta[j - 1];
    const auto& r = ta[j];
    out.u[j] = s.u[j] - dt * flux_G(l.right, tv[j - 1].right, r.left, tv[j].left);
    H[j] = flux_H(l.right, tv[j - 1].right, r.left, tv[j].left, tb[j - 1].right, tb[j].left);
  }
  H[0] = left_boundary_flux_1d(p, ta[0].left, tv[0].left);
  H[m] = right_boundary_flux_1d(p, ta[m - 1].right, tv[m - 1].right);
  apply_bc_1d(p, s.u, m >= 2 ? ta[m - 2].right : 0.0, out.u);

  for (std::size_t i = 0; i < m; ++i)
    out.v[i] = s.v[i] - lambda * (H[i + 1] - H[i]) + dt * source_S(ta[i].right, tv[i].right);
  return out;
}

/// SSP-RK2 step: two MUSCL stages and averaging with the old state. When
/// adaptive, the slopes of both stages are scaled by Theta computed from the
/// time-level-n state.
inline State1D so_step(const Problem1D& p, const State1D& s, double theta, double dt,
                       bool adaptive, double* theta_max = nullptr) {
  const std::size_t m = p.grid().cells();
  const std::vector<double> scale =
      adaptive ? theta_field_1d(p, s) : std::vector<double>(m, 1.0);
  if (theta_max) *theta_max = detail::max_of(scale);
  const State1D s1 = rk_stage(p, s, theta, scale, dt);
  const State1D s2 = rk_stage(p, s1, theta, scale, dt);
  State1D out = State1D::zeros(p.grid());
  for (std::size_t j = 0; j <= m; ++j) out.u[j] = 0.5 * (s.u[j] + s2.u[j]);
  for (std::size_t i = 0; i < m; ++i) out.v[i] = 0.5 * (s.v[i] + s2.v[i]);
  return out;
}

/// Time integration of one 1D problem with a fixed ratio lambda = dt/dx.
class Solver1D {
 public:
  Solver1D(Problem1D problem, SchemeConfig config, State1D initial,
           CflPolicy policy = CflPolicy::Enforce)
      : problem_(std::move(problem)), config_(config), state_(std::move(initial)), policy_(policy) {
    config_.validate();
    check_dimensions(state_, problem_.grid());
  }

  const State1D& state() const noexcept { return state_; }
  const Problem1D& problem() const noexcept { return problem_; }
  const SchemeConfig& config() const noexcept { return config_; }
  double time() const noexcept { return t_; }
  std::size_t steps() const noexcept { return steps_; }
  double nominal_dt() const noexcept { return config_.lambda * problem_.grid().dx(); }

  /// Advance by `dt` (defaults to lambda * dx).
  StepReport step(double dt = -1.0) {
    if (dt <= 0.0) dt = nominal_dt();
    const double lambda = dt / problem_.grid().dx();
    StepReport r;
    r.dt = dt;
    r.max_v = detail::max_of(state_.v);
    r.cfl1_ok = cfl1_holds(lambda, r.max_v);
    r.cfl2_ok = cfl2_holds(lambda, dt);
    enforce_cfl(r, lambda, policy_);

    switch (config_.kind) {
      case SchemeKind::FO: state_ = fo_step(problem_, state_, dt); break;
      case SchemeKind::SO: state_ = so_step(problem_, state_, config_.theta, dt, false); break;
      case SchemeKind::SOTheta:
        state_ = so_step(problem_, state_, config_.theta, dt, true, &r.theta_max);
        break;
    }
    if (config_.kind == SchemeKind::SO) r.theta_max = 1.0;
    t_ += dt;
    ++steps_;
    r.max_abs_alpha = detail::max_abs_of(derive_alpha_1d(state_, problem_.grid()));
    r.min_v = detail::min_of(state_.v);
    return r;
  }

  /// Step until t_final; the last step is shortened to land on it exactly.
  void run(const std::function<void(const StepReport&)>& on_step = {}) {
    const double dt = nominal_dt();
    while (t_ < config_.t_final) {
      const double remaining = config_.t_final - t_;
      if (remaining <= 1e-12 * dt) break;
      const StepReport r = step(std::min(dt, remaining));
      if (on_step) on_step(r);
    }
  }

 private:
  Problem1D problem_;
  SchemeConfig config_;
  State1D state_;
  CflPolicy policy_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace sandpile
