#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "flux.hpp"
#include "grid.hpp"
#include "limiters.hpp"
#include "scheme1d.hpp"
#include "source.hpp"

namespace sandpile {

/// Fixed data of a 2D problem. With `y_periodic` the table is an infinite
/// channel along y: rows wrap, only the x ends are table boundaries, and the
/// source is transported along x only. It exists to compare the 2D scheme
/// with the 1D one on y-invariant data.
class Problem2D {
 public:
  Problem2D(Grid2D grid, SourceSpec2D source, bool y_periodic = false)
      : grid_(grid), source_(std::move(source)), y_periodic_(y_periodic) {
    if (y_periodic_ && source_.table != TableKind::Open)
      throw ConfigError("a y-periodic channel needs open x ends");
    tables_ = y_periodic_ ? build_channel_tables() : build_B_2d(source_, grid_);
  }

  const Grid2D& grid() const noexcept { return grid_; }
  const SourceSpec2D& source() const noexcept { return source_; }
  TableKind table() const noexcept { return source_.table; }
  bool y_periodic() const noexcept { return y_periodic_; }
  const SourceTables2D& B() const noexcept { return tables_; }

 private:
  SourceTables2D build_channel_tables() const {
    const std::size_t m = grid_.cells();
    SourceTables2D t{Field2D(m + 2, m), Field2D(m, m + 2)};
    for (std::size_t k = 0; k < m; ++k) {
      const double y = grid_.center(static_cast<std::ptrdiff_t>(k + 1));
      std::vector<double> breaks;
      for (const Rect& r : source_.rects) {
        breaks.push_back(r.x0);
        breaks.push_back(r.x1);
      }
      const auto row = detail::primitive_at_centers(
          grid_.axis(), breaks, [&](double, double probe) { return source_.f(probe, y); });
      for (std::size_t i = 0; i < m + 2; ++i) t.bx(i, k) = row[i];
    }
    return t;
  }

  Grid2D grid_;
  SourceSpec2D source_;
  bool y_periodic_;
  SourceTables2D tables_;
};

namespace detail {

/// Limited linear reconstruction of every line of `z` (rows when along_x,
/// columns otherwise). Non-periodic lines get zero slope in their end
/// entries. `lo`/`hi` receive the values at the low/high end of each entry.
template <class Scale>
void reconstruct_lines(const Field2D& z, bool along_x, bool periodic, double theta, Scale&& scale,
                       Field2D& lo, Field2D& hi) {
  const std::size_t n = along_x ? z.nx() : z.ny();
  const std::size_t lines = along_x ? z.ny() : z.nx();
  lo = Field2D(z.nx(), z.ny());
  hi = Field2D(z.nx(), z.ny());
  auto at = [&](std::size_t line, std::size_t p) -> double {
    return along_x ? z(p, line) : z(line, p);
  };
  for (std::size_t line = 0; line < lines; ++line) {
    for (std::size_t p = 0; p < n; ++p) {
      double slope = 0.0;
      if (periodic) {
        slope = limited_slope(at(line, (p + n - 1) % n), at(line, p), at(line, (p + 1) % n), theta);
      } else if (p > 0 && p + 1 < n) {
        slope = limited_slope(at(line, p - 1), at(line, p), at(line, p + 1), theta);
      }
      const std::size_t i = along_x ? p : line;
      const std::size_t k = along_x ? line : p;
      const auto t = reconstruct(z(i, k), slope, scale(i, k));
      lo(i, k) = t.left;
      hi(i, k) = t.right;
    }
  }
}

}  // namespace detail

/// Interface values of one stage. Cell fields are M x M; `*_lo`/`*_hi` are
/// the values at the low/high side of the cell along the named axis.
/// Edge slopes of u keep the layout of SlopeFields2D.
struct Traces2D {
  Field2D ax_lo, ax_hi, vx_lo, vx_hi, bx_lo, bx_hi;  // along x
  Field2D by_lo, by_hi, vy_lo, vy_hi, byy_lo, byy_hi;  // along y (beta, v, B^y)
  Field2D ae_lo, ae_hi;  // alpha edges, ends at vertex i and i+1
  Field2D be_lo, be_hi;  // beta edges, ends at vertex k and k+1
};

/// Cell-centered B tables without the ghost entries.
inline Field2D interior_bx(const Problem2D& p) {
  const std::size_t m = p.grid().cells();
  Field2D out(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i) out(i, k) = p.B().bx(i + 1, k);
  return out;
}

inline Field2D interior_by(const Problem2D& p) {
  const std::size_t m = p.grid().cells();
  Field2D out(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i) out(i, k) = p.B().by(i, k + 1);
  return out;
}

/// Traces for the stage. With `theta` empty no reconstruction is done at all
/// (first-order scheme); `cell_scale` multiplies each cell's slopes and an
/// edge uses the larger factor of its two neighbouring cells.
inline Traces2D build_traces_2d(const Problem2D& p, const State2D& s, const SlopeFields2D& sl,
                                std::optional<double> theta, const Field2D* cell_scale) {
  const std::size_t m = p.grid().cells();
  const bool per = p.y_periodic();
  const Field2D bxc = interior_bx(p);
  const Field2D byc = interior_by(p);
  Traces2D t;
  if (!theta) {
    t.ax_lo = t.ax_hi = sl.alpha_cell;
    t.vx_lo = t.vx_hi = s.v;
    t.bx_lo = t.bx_hi = bxc;
    t.by_lo = t.by_hi = sl.beta_cell;
    t.vy_lo = t.vy_hi = s.v;
    t.byy_lo = t.byy_hi = byc;
    t.ae_lo = t.ae_hi = sl.alpha_edge;
    t.be_lo = t.be_hi = sl.beta_edge;
    return t;
  }
  const double th = *theta;
  auto cell = [&](std::size_t i, std::size_t k) { return cell_scale ? (*cell_scale)(i, k) : 1.0; };
  // alpha edge (i, l) borders cells (i, l-1) and (i, l)
  auto alpha_edge_scale = [&](std::size_t i, std::size_t l) {
    if (!cell_scale) return 1.0;
    double s_max = 0.0;
    if (l > 0) s_max = std::max(s_max, cell(i, l - 1));
    else if (per) s_max = std::max(s_max, cell(i, m - 1));
    if (l < m) s_max = std::max(s_max, cell(i, l));
    else if (per) s_max = std::max(s_max, cell(i, 0));
    return s_max;
  };
  // beta edge (j, k) borders cells (j-1, k) and (j, k)
  auto beta_edge_scale = [&](std::size_t j, std::size_t k) {
    if (!cell_scale) return 1.0;
    double s_max = 0.0;
    if (j > 0) s_max = std::max(s_max, cell(j - 1, k));
    if (j < m) s_max = std::max(s_max, cell(j, k));
    return s_max;
  };
  detail::reconstruct_lines(sl.alpha_cell, true, false, th, cell, t.ax_lo, t.ax_hi);
  detail::reconstruct_lines(s.v, true, false, th, cell, t.vx_lo, t.vx_hi);
  detail::reconstruct_lines(bxc, true, false, th, cell, t.bx_lo, t.bx_hi);
  detail::reconstruct_lines(sl.beta_cell, false, per, th, cell, t.by_lo, t.by_hi);
  detail::reconstruct_lines(s.v, false, per, th, cell, t.vy_lo, t.vy_hi);
  detail::reconstruct_lines(byc, false, per, th, cell, t.byy_lo, t.byy_hi);
  detail::reconstruct_lines(sl.alpha_edge, true, false, th, alpha_edge_scale, t.ae_lo, t.ae_hi);
  detail::reconstruct_lines(sl.beta_edge, false, per, th, beta_edge_scale, t.be_lo, t.be_hi);
  return t;
}

/// Values entering the erosion term at one vertex. The slope traces sit on
/// the four edges meeting there; the v traces are averages of the two cells
/// on each side.
struct VertexTraces {
  double alpha_l, alpha_r, beta_b, beta_t;
  double v_l, v_r, v_b, v_t;
};

inline double g_term_2d(const VertexTraces& t) {
  const double ax = std::max(std::abs(std::max(t.alpha_l, 0.0)), std::abs(std::min(t.alpha_r, 0.0)));
  const double ay = std::max(std::abs(std::max(t.beta_b, 0.0)), std::abs(std::min(t.beta_t, 0.0)));
  const double gx_tilde = ax * ax;
  const double gy_tilde = ay * ay;
  const double al = std::max(t.alpha_l, 0.0);
  const double ar = std::min(t.alpha_r, 0.0);
  const double bb = std::max(t.beta_b, 0.0);
  const double bt = std::min(t.beta_t, 0.0);
  const double wx_l = (std::sqrt(al * al + gy_tilde) - 1.0) * t.v_l;
  const double wx_r = (std::sqrt(ar * ar + gy_tilde) - 1.0) * t.v_r;
  const double wy_b = (std::sqrt(bb * bb + gx_tilde) - 1.0) * t.v_b;
  const double wy_t = (std::sqrt(bt * bt + gx_tilde) - 1.0) * t.v_t;
  return std::max(std::max(wx_l, wx_r), std::max(wy_b, wy_t));
}

/// Fluxes of one stage: G at vertices ((M+1)^2, zero where u is set by the
/// boundary rule), Hx at x-interfaces ((M+1) x M), Hy at y-interfaces (M x (M+1)).
struct Fluxes2D {
  Field2D G;
  Field2D Hx;
  Field2D Hy;
};

inline VertexTraces vertex_traces(const Traces2D& t, std::size_t j, std::size_t l, std::size_t m,
                                  bool periodic) {
  const std::size_t lb = l > 0 ? l - 1 : (periodic ? m - 1 : 0);  // cell row below
  const std::size_t lt = l < m ? l : 0;                           // cell row above
  VertexTraces v{};
  v.alpha_l = t.ae_hi(j - 1, l);
  v.alpha_r = t.ae_lo(j, l);
  v.beta_b = t.be_hi(j, lb);
  v.beta_t = t.be_lo(j, lt);
  v.v_l = 0.5 * (t.vx_hi(j - 1, lb) + t.vx_hi(j - 1, lt));
  v.v_r = 0.5 * (t.vx_lo(j, lb) + t.vx_lo(j, lt));
  v.v_b = 0.5 * (t.vy_hi(j - 1, lb) + t.vy_hi(j, lb));
  v.v_t = 0.5 * (t.vy_lo(j - 1, lt) + t.vy_lo(j, lt));
  return v;
}

inline Fluxes2D assemble_fluxes_2d(const Problem2D& p, const Traces2D& t) {
  const std::size_t m = p.grid().cells();
  const bool per = p.y_periodic();
  const bool partial = p.table() == TableKind::PartiallyOpen;
  const auto& Bx = p.B().bx;
  const auto& By = p.B().by;
  Fluxes2D f{Field2D(m + 1, m + 1), Field2D(m + 1, m), Field2D(m, m + 1)};

  const std::size_t l_begin = per ? 0 : 1;
  for (std::size_t l = l_begin; l < m; ++l)
    for (std::size_t j = 1; j < m; ++j) f.G(j, l) = g_term_2d(vertex_traces(t, j, l, m, per));
  if (per)
    for (std::size_t j = 0; j <= m; ++j) f.G(j, m) = f.G(j, 0);

  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 1; j < m; ++j)
      f.Hx(j, k) = flux_H(t.ax_hi(j - 1, k), t.vx_hi(j - 1, k), t.ax_lo(j, k), t.vx_lo(j, k),
                          t.bx_hi(j - 1, k), t.bx_lo(j, k));
    const double a1 = t.ax_lo(0, k), v1 = t.vx_lo(0, k);
    const double am = t.ax_hi(m - 1, k), vm = t.vx_hi(m - 1, k);
    const double open_l = -a1 * v1 - t.bx_lo(0, k);
    const double open_r = -am * vm - t.bx_hi(m - 1, k);
    f.Hx(0, k) = (!partial || a1 >= 0.0) ? open_l : -Bx(0, k);
    f.Hx(m, k) = (!partial || am <= 0.0) ? open_r : -Bx(m + 1, k);
  }

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 1; l < m; ++l)
      f.Hy(i, l) = flux_H(t.by_hi(i, l - 1), t.vy_hi(i, l - 1), t.by_lo(i, l), t.vy_lo(i, l),
                          t.byy_hi(i, l - 1), t.byy_lo(i, l));
    if (per) {
      f.Hy(i, 0) = flux_H(t.by_hi(i, m - 1), t.vy_hi(i, m - 1), t.by_lo(i, 0), t.vy_lo(i, 0),
                          t.byy_hi(i, m - 1), t.byy_lo(i, 0));
      f.Hy(i, m) = f.Hy(i, 0);
      continue;
    }
    const double b1 = t.by_lo(i, 0), v1 = t.vy_lo(i, 0);
    const double bm = t.by_hi(i, m - 1), vm = t.vy_hi(i, m - 1);
    const double open_b = -b1 * v1 - t.byy_lo(i, 0);
    const double open_t = -bm * vm - t.byy_hi(i, m - 1);
    const bool outlet = p.grid().center(static_cast<std::ptrdiff_t>(i + 1)) <= 0.5;
    f.Hy(i, 0) = (!partial || outlet || b1 >= 0.0) ? open_b : -By(i, 0);
    f.Hy(i, m) = (!partial || bm <= 0.0) ? open_t : -By(i, m + 1);
  }
  return f;
}

/// Boundary vertices of u after a stage, from the stage input `u_in` and its
/// edge slopes. Open table: zero. Partially open table: outflow through the
/// bottom edge x <= 1/2, walls elsewhere extrapolate u with the inward slope
/// when the pile rises towards the wall; corners average the two directions.
inline void apply_bc_2d(const Problem2D& p, const Field2D& u_in, const SlopeFields2D& sl,
                        Field2D& u_out) {
  const std::size_t m = p.grid().cells();
  const double h = p.grid().h();
  if (p.y_periodic()) {
    for (std::size_t l = 0; l <= m; ++l) u_out(0, l) = u_out(m, l) = 0.0;
    return;
  }
  if (p.table() == TableKind::Open) {
    for (std::size_t n = 0; n <= m; ++n) {
      u_out(n, 0) = u_out(n, m) = 0.0;
      u_out(0, n) = u_out(m, n) = 0.0;
    }
    return;
  }
  // Vertical walls, one value per vertex row l.
  auto left = [&](std::size_t l) { return u_in(1, l) + h * std::max(-sl.alpha_edge(1, l), 0.0); };
  auto right = [&](std::size_t l) {
    return u_in(m - 1, l) + h * std::max(sl.alpha_edge(m - 2, l), 0.0);
  };
  // Horizontal edges, one value per vertex column j.
  auto bottom = [&](std::size_t j) {
    if (p.grid().vertex(j) <= 0.5) return 0.0;
    return u_in(j, 1) + h * std::max(-sl.beta_edge(j, 1), 0.0);
  };
  auto top = [&](std::size_t j) {
    return u_in(j, m - 1) + h * std::max(sl.beta_edge(j, m - 2), 0.0);
  };
  for (std::size_t l = 1; l < m; ++l) {
    u_out(0, l) = left(l);
    u_out(m, l) = right(l);
  }
  for (std::size_t j = 1; j < m; ++j) {
    u_out(j, 0) = bottom(j);
    u_out(j, m) = top(j);
  }
  u_out(0, 0) = 0.5 * (left(0) + bottom(0));
  u_out(m, 0) = 0.5 * (right(0) + bottom(m));
  u_out(0, m) = 0.5 * (left(m) + top(0));
  u_out(m, m) = 0.5 * (right(m) + top(m));
}

/// Forward-Euler stage from `s` with the given traces.
inline State2D apply_stage_2d(const Problem2D& p, const State2D& s, const SlopeFields2D& sl,
                              const Traces2D& t, double dt) {
  const std::size_t m = p.grid().cells();
  const double lambda = dt / p.grid().h();
  const Fluxes2D f = assemble_fluxes_2d(p, t);
  State2D out = State2D::zeros(p.grid());
  for (std::size_t l = 0; l <= m; ++l)
    for (std::size_t j = 0; j <= m; ++j) out.u(j, l) = s.u(j, l) - dt * f.G(j, l);
  apply_bc_2d(p, s.u, sl, out.u);
  if (p.y_periodic())
    for (std::size_t j = 0; j <= m; ++j) out.u(j, m) = out.u(j, 0);

  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      const double div = f.Hx(i + 1, k) - f.Hx(i, k) + f.Hy(i, k + 1) - f.Hy(i, k);
      const double a = t.ax_hi(i, k);
      const double b = t.by_hi(i, k);
      out.v(i, k) = s.v(i, k) - lambda * div + dt * (std::sqrt(a * a + b * b) - 1.0) * s.v(i, k);
    }
  }
  return out;
}

/// First-order step: traces are the unreconstructed cell and edge values.
inline State2D fo_step_2d(const Problem2D& p, const State2D& s, double dt) {
  check_dimensions(s, p.grid());
  const SlopeFields2D sl = derive_alpha_beta_2d(s.u, p.grid().h());
  return apply_stage_2d(p, s, sl, build_traces_2d(p, s, sl, std::nullopt, nullptr), dt);
}

/// One MUSCL stage; `cell_scale` null means plain (unscaled) slopes.
inline State2D rk_stage_2d(const Problem2D& p, const State2D& s, double theta,
                           const Field2D* cell_scale, double dt) {
  check_dimensions(s, p.grid());
  const SlopeFields2D sl = derive_alpha_beta_2d(s.u, p.grid().h());
  return apply_stage_2d(p, s, sl, build_traces_2d(p, s, sl, theta, cell_scale), dt);
}

/// Directional indicators add up; the sum is capped at 1.
inline double combine_theta(double theta_x, double theta_y) {
  return std::min(1.0, theta_x + theta_y);
}

/// Steady-state indicator per cell from first-order fluxes of `s`. Vertex
/// (j, l) carries the residual of the cell below-left of it and the erosion
/// term G there: E = sqrt(div^2 + G^2). Each cell combines the two vertices
/// of its top edge (x part) and of its right edge (y part).
inline Field2D theta_field_2d(const Problem2D& p, const State2D& s) {
  const std::size_t m = p.grid().cells();
  const bool per = p.y_periodic();
  const double h = p.grid().h();
  const SlopeFields2D sl = derive_alpha_beta_2d(s.u, h);
  const Fluxes2D f = assemble_fluxes_2d(p, build_traces_2d(p, s, sl, std::nullopt, nullptr));

  Field2D e(m + 1, m + 1);
  for (std::size_t l = 0; l <= m; ++l) {
    for (std::size_t j = 0; j <= m; ++j) {
      double div = 0.0;
      std::optional<std::size_t> row;
      if (l > 0) row = l - 1;
      else if (per) row = m - 1;
      if (j > 0 && row) {
        const std::size_t i = j - 1, k = *row;
        div = f.Hx(i + 1, k) - f.Hx(i, k) + f.Hy(i, k + 1) - f.Hy(i, k);
      }
      e(j, l) = std::sqrt(div * div + f.G(j, l) * f.G(j, l));
    }
  }
  Field2D out(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      const double tx = steady_indicator(e(i, k + 1) + e(i + 1, k + 1), h);
      const double ty = steady_indicator(e(i + 1, k) + e(i + 1, k + 1), h);
      out(i, k) = combine_theta(tx, ty);
    }
  }
  return out;
}

inline State2D so_step_2d(const Problem2D& p, const State2D& s, double theta, double dt,
                          bool adaptive, double* theta_max = nullptr) {
  std::optional<Field2D> scale;
  if (adaptive) scale = theta_field_2d(p, s);
  if (theta_max)
    *theta_max = scale ? *std::max_element(scale->data().begin(), scale->data().end()) : 1.0;
  const Field2D* sp = scale ? &*scale : nullptr;
  const State2D s1 = rk_stage_2d(p, s, theta, sp, dt);
  const State2D s2 = rk_stage_2d(p, s1, theta, sp, dt);
  State2D out = s;
  auto& u = out.u.data();
  auto& v = out.v.data();
  for (std::size_t n = 0; n < u.size(); ++n) u[n] = 0.5 * (u[n] + s2.u.data()[n]);
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = 0.5 * (v[n] + s2.v.data()[n]);
  return out;
}

inline double max_abs_slope_2d(const State2D& s, double h) {
  const SlopeFields2D sl = derive_alpha_beta_2d(s.u, h);
  return std::max(detail::max_abs_of(sl.alpha_edge.data()), detail::max_abs_of(sl.beta_edge.data()));
}

class Solver2D {
 public:
  Solver2D(Problem2D problem, SchemeConfig config, State2D initial,
           CflPolicy policy = CflPolicy::Enforce)
      : problem_(std::move(problem)), config_(config), state_(std::move(initial)), policy_(policy) {
    config_.validate();
    check_dimensions(state_, problem_.grid());
  }

  const State2D& state() const noexcept { return state_; }
  const Problem2D& problem() const noexcept { return problem_; }
  const SchemeConfig& config() const noexcept { return config_; }
  double time() const noexcept { return t_; }
  std::size_t steps() const noexcept { return steps_; }
  double nominal_dt() const noexcept { return config_.lambda * problem_.grid().h(); }

  StepReport step(double dt = -1.0) {
    if (dt <= 0.0) dt = nominal_dt();
    const double h = problem_.grid().h();
    const double lambda = dt / h;
    StepReport r;
    r.dt = dt;
    r.max_v = detail::max_of(state_.v.data());
    r.cfl1_ok = cfl1_holds(lambda, r.max_v);
    r.cfl2_ok = cfl2_holds(lambda, dt);
    enforce_cfl(r, lambda, policy_);
    switch (config_.kind) {
      case SchemeKind::FO: state_ = fo_step_2d(problem_, state_, dt); break;
      case SchemeKind::SO:
        state_ = so_step_2d(problem_, state_, config_.theta, dt, false, &r.theta_max);
        break;
      case SchemeKind::SOTheta:
        state_ = so_step_2d(problem_, state_, config_.theta, dt, true, &r.theta_max);
        break;
    }
    t_ += dt;
    ++steps_;
    r.max_abs_alpha = max_abs_slope_2d(state_, h);
    r.min_v = detail::min_of(state_.v.data());
    return r;
  }

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
  Problem2D problem_;
  SchemeConfig config_;
  State2D state_;
  CflPolicy policy_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace sandpile
