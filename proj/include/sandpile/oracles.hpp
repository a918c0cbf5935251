#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace sandpile {

/// Constant-source steady states of the open table in 1D.
enum class Steady1DKind { FUnit, FHalf };

inline double steady_1d_source(Steady1DKind kind) {
  return kind == Steady1DKind::FUnit ? 1.0 : 0.5;
}

/// (u, v) of the steady state: u = min(x, 1-x), v = f |x - 1/2|.
inline std::pair<double, double> steady_1d(Steady1DKind kind, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("steady_1d: x outside [0,1]");
  const double f = steady_1d_source(kind);
  return {std::min(x, 1.0 - x), f * std::abs(x - 0.5)};
}

/// Oracle sampled on the grid: u at vertices, v at cell centers.
inline State1D sample_steady_1d(Steady1DKind kind, const Grid1D& grid) {
  State1D s = State1D::zeros(grid);
  for (std::size_t j = 0; j < grid.vertices(); ++j) s.u[j] = steady_1d(kind, grid.vertex(j)).first;
  for (std::size_t i = 0; i < grid.cells(); ++i)
    s.v[i] = steady_1d(kind, grid.center(static_cast<std::ptrdiff_t>(i + 1))).second;
  return s;
}

/// Open square table with constant source f: the pile is the distance to the
/// boundary and grains roll straight to the nearest edge, collecting f along
/// the way from the ridge.
inline std::pair<double, double> steady_2d_open(double f, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw ConfigError("steady_2d_open: point outside the unit square");
  const double dx = std::min(x, 1.0 - x);
  const double dy = std::min(y, 1.0 - y);
  // Nearest the bottom edge, say, the ray runs along y from the diagonal
  // ridge at height dx down to the edge.
  return {std::min(dx, dy), f * (std::max(dx, dy) - std::min(dx, dy))};
}

/// Partially open table (outflow only through y = 0, x <= 1/2), scaled by a
/// constant source value. `v` is empty at the singular point (1/2, 0).
struct Steady2DPartial {
  double u;
  std::optional<double> v;
};

inline double partial_distance(double x, double y) { return std::hypot(x - 0.5, y); }

/// Length of the transport ray through (x, y) from the outlet corner (1/2, 0)
/// to the wall, for x > 1/2.
inline double partial_ray_length(double x, double y) {
  const double dx = x - 0.5;
  const double slope = y / dx;
  if (slope <= 2.0) {
    const double t = 0.5 * y / dx;
    return std::sqrt(0.25 + t * t);
  }
  const double t = dx / y;
  return std::sqrt(1.0 + t * t);
}

inline Steady2DPartial steady_2d_partial(double f, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw ConfigError("steady_2d_partial: point outside the unit square");
  if (x == 0.5 && y == 0.0) return {0.0, std::nullopt};
  if (x <= 0.5) return {y, f * (1.0 - y)};
  const double d = partial_distance(x, y);
  if (d == 0.0) return {0.0, std::nullopt};
  const double l = partial_ray_length(x, y);
  return {d, f * (l * l - d * d) / (2.0 * d)};
}

/// Numeric state minus oracle: sup over u vertices and L1 over v cells.
struct ErrorNorms {
  double u_sup = 0.0;
  double v_l1 = 0.0;
};

inline ErrorNorms error_norms(const State1D& s, const State1D& ref, const Grid1D& grid) {
  check_dimensions(s, grid);
  check_dimensions(ref, grid);
  ErrorNorms e;
  for (std::size_t j = 0; j < s.u.size(); ++j) e.u_sup = std::max(e.u_sup, std::abs(s.u[j] - ref.u[j]));
  for (std::size_t i = 0; i < s.v.size(); ++i) e.v_l1 += std::abs(s.v[i] - ref.v[i]);
  e.v_l1 *= grid.dx();
  return e;
}

/// 2D variant; cells where the oracle is undefined (NaN in `ref.v`) are skipped.
inline ErrorNorms error_norms(const State2D& s, const State2D& ref, const Grid2D& grid) {
  check_dimensions(s, grid);
  check_dimensions(ref, grid);
  ErrorNorms e;
  const auto& su = s.u.data();
  const auto& ru = ref.u.data();
  for (std::size_t n = 0; n < su.size(); ++n) e.u_sup = std::max(e.u_sup, std::abs(su[n] - ru[n]));
  const auto& sv = s.v.data();
  const auto& rv = ref.v.data();
  for (std::size_t n = 0; n < sv.size(); ++n)
    if (!std::isnan(rv[n])) e.v_l1 += std::abs(sv[n] - rv[n]);
  e.v_l1 *= grid.h() * grid.h();
  return e;
}

/// log2(e(h) / e(h/2)); undefined (nullopt) unless both errors are positive.
inline std::optional<double> eoc(double e_coarse, double e_fine) {
  if (!(e_coarse > 0.0 && e_fine > 0.0)) return std::nullopt;
  return std::log2(e_coarse / e_fine);
}

/// One-step change v^1_i - v^0_i of the non-adaptive second-order scheme from
/// the f = 1 discrete steady state, as stated in closed form by the published
/// proof. Index classes are relative to the crest cell K = M/2 (1-based).
enum class T41Row { LowFar, KMinus3, KMinus2, KMinus1, K, KPlus1, KPlus2, HighFar };

inline T41Row t41_row(std::size_t i, std::size_t k) {
  const auto d = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k);
  if (d <= -4) return T41Row::LowFar;
  if (d >= 3) return T41Row::HighFar;
  switch (d) {
    case -3: return T41Row::KMinus3;
    case -2: return T41Row::KMinus2;
    case -1: return T41Row::KMinus1;
    case 0: return T41Row::K;
    case 1: return T41Row::KPlus1;
    default: return T41Row::KPlus2;
  }
}

inline double t41_increment(T41Row row, double theta, double lambda, double dx) {
  const double dt = lambda * dx;
  double bracket = 0.0;
  switch (row) {
    case T41Row::KPlus1: bracket = dt - lambda * (dt - dx); break;
    case T41Row::KPlus2: bracket = -dt - lambda * (-2.0 * dt - 2.0 * theta * dt + dx); break;
    case T41Row::HighFar: bracket = -lambda * (dt + 2.0 * theta * dx); break;
    case T41Row::KMinus1: bracket = dt - lambda * (dx - theta * dt); break;
    case T41Row::KMinus2: bracket = -lambda * (-dt); break;
    case T41Row::KMinus3: bracket = -lambda * (theta * dt); break;
    case T41Row::LowFar: bracket = 0.0; break;
    case T41Row::K: bracket = dt - lambda * (dt - dx); break;
  }
  return 0.5 * theta * bracket;
}

/// Per-cell table (0-based storage of 1-based i = 1..M).
inline std::vector<double> theorem41_oracle(std::size_t cells, double theta, double lambda) {
  if (cells % 2 != 0) throw ConfigError("theorem41_oracle: M must be even");
  const Grid1D grid(cells);
  const std::size_t k = cells / 2;
  std::vector<double> out(cells);
  for (std::size_t i = 1; i <= cells; ++i)
    out[i - 1] = t41_increment(t41_row(i, k), theta, lambda, grid.dx());
  return out;
}

/// The same one-step change re-derived with Dv_i = -2 theta dx left of the
/// crest (v decreases there). The result is mirror symmetric about the crest
/// and vanishes beyond three cells on either side:
///   K, K+1      (theta/2)(dt - lambda(dt - dx))
///   K-1, K+2    (theta/2)(-dt - lambda(dx - 2dt - 2 theta dt))
///   K-2, K+3   -(theta/2) lambda dt (1 + 2 theta)
/// Valid for M >= 10 so that the boundary cells stay out of reach.
inline std::vector<double> theorem41_rederived(std::size_t cells, double theta, double lambda) {
  if (cells % 2 != 0) throw ConfigError("theorem41_rederived: M must be even");
  if (cells < 10) throw ConfigError("theorem41_rederived: M must be at least 10");
  const double dx = Grid1D(cells).dx();
  const double dt = lambda * dx;
  const double crest = 0.5 * theta * (dt - lambda * (dt - dx));
  const double next = 0.5 * theta * (-dt - lambda * (dx - 2.0 * dt - 2.0 * theta * dt));
  const double far = -0.5 * theta * lambda * dt * (1.0 + 2.0 * theta);
  const std::size_t k = cells / 2;
  std::vector<double> out(cells, 0.0);
  out[k - 1] = out[k] = crest;  // 1-based K and K+1
  out[k - 2] = out[k + 1] = next;
  out[k - 3] = out[k + 2] = far;
  return out;
}

}  // namespace sandpile
