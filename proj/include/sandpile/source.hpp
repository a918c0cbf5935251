#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace sandpile {

struct Interval {
  double lo;
  double hi;
};

struct Rect {
  double x0, x1, y0, y1;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

namespace detail {

/// Composite trapezoid rule over [nodes.front(), nodes.back()] returning the
/// running integral at every node. The integrand receives the evaluation
/// point and the midpoint of the current segment; piecewise definitions
/// resolve their active piece from the midpoint, so jumps placed on nodes are
/// integrated without smearing.
template <class Integrand>
std::vector<double> cumulative_trapezoid(const std::vector<double>& nodes, Integrand&& g) {
  std::vector<double> acc(nodes.size(), 0.0);
  for (std::size_t n = 1; n < nodes.size(); ++n) {
    const double p = nodes[n - 1];
    const double q = nodes[n];
    const double mid = 0.5 * (p + q);
    acc[n] = acc[n - 1] + 0.5 * (q - p) * (g(p, mid) + g(q, mid));
  }
  return acc;
}

inline std::vector<double> sorted_nodes(std::vector<double> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

/// Running integral sampled at the cell centers 0..M+1 (ghosts included) of
/// a line through the unit interval. The integrand vanishes outside [0,1].
template <class Integrand>
std::vector<double> primitive_at_centers(const Grid1D& axis, std::vector<double> breaks,
                                         Integrand&& g) {
  const std::size_t m = axis.cells();
  std::vector<double> nodes;
  nodes.reserve(m + 2 + breaks.size());
  nodes.push_back(0.0);
  nodes.push_back(1.0);
  for (std::size_t i = 1; i <= m; ++i) nodes.push_back(axis.center(static_cast<std::ptrdiff_t>(i)));
  for (double b : breaks)
    if (b > 0.0 && b < 1.0) nodes.push_back(b);
  nodes = sorted_nodes(std::move(nodes));
  const std::vector<double> acc = cumulative_trapezoid(nodes, g);

  std::vector<double> out(m + 2, 0.0);
  std::size_t n = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double x = axis.center(static_cast<std::ptrdiff_t>(i));
    while (nodes[n] < x) ++n;
    out[i] = acc[n];
  }
  out[0] = 0.0;
  out[m + 1] = acc.back();
  return out;
}

}  // namespace detail

/// Piecewise-constant 1D source: `value` on the union of `pieces`, zero
/// elsewhere; no pieces means the whole table.
struct Source1D {
  double value = 0.0;
  std::vector<Interval> pieces;

  static Source1D constant(double value) { return {value, {}}; }

  double operator()(double x) const {
    if (x < 0.0 || x > 1.0) return 0.0;
    if (pieces.empty()) return value;
    for (const Interval& p : pieces)
      if (x >= p.lo && x <= p.hi) return value;
    return 0.0;
  }

  /// Closed hull [X1, X2] of the support, or nullopt-like {1,0} when f == 0.
  Interval support() const {
    if (value == 0.0) return {1.0, 0.0};
    if (pieces.empty()) return {0.0, 1.0};
    Interval hull{1.0, 0.0};
    for (const Interval& p : pieces) {
      hull.lo = std::min(hull.lo, std::max(0.0, p.lo));
      hull.hi = std::max(hull.hi, std::min(1.0, p.hi));
    }
    return hull;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const Interval& p : pieces) {
      out.push_back(p.lo);
      out.push_back(p.hi);
    }
    return out;
  }
};

/// B_i = int_0^{x_i} f for i = 0..M+1 (index 0 and M+1 are the ghost centers,
/// with f taken as zero off the table).
inline std::vector<double> build_B_1d(const Source1D& source, const Grid1D& grid) {
  return detail::primitive_at_centers(grid, source.breakpoints(),
                                      [&](double, double probe) { return source(probe); });
}

/// Open table: f1 carries the part of f whose transport ray runs along x.
/// Points on the diagonals belong to f1.
inline std::pair<double, double> split_open(double f, double x, double y) {
  const bool along_x = (x >= y && x + y >= 1.0) || (x <= y && x + y <= 1.0);
  return along_x ? std::pair{f, 0.0} : std::pair{0.0, f};
}

/// Partially open table: rays emanate from (1/2, 0); f1 = f cos^2(phi),
/// f2 = f sin^2(phi). The pole itself is split evenly.
inline std::pair<double, double> split_partial(double f, double x, double y) {
  const double dx = x - 0.5;
  if (dx == 0.0 && y == 0.0) return {0.5 * f, 0.5 * f};
  const double phi = std::atan2(y, dx);
  const double c = std::cos(phi);
  const double c2 = c * c;
  return {f * c2, f * (1.0 - c2)};
}

/// 2D source description: `value` on the union of `rects` (whole table when
/// empty), split along transport rays according to the table kind.
struct SourceSpec2D {
  TableKind table = TableKind::Open;
  double value = 0.0;
  std::vector<Rect> rects;

  double f(double x, double y) const {
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) return 0.0;
    if (rects.empty()) return value;
    for (const Rect& r : rects)
      if (r.contains(x, y)) return value;
    return 0.0;
  }

  /// (f1, f2) at `point`; region membership and the value of f are taken at
  /// `probe` so that quadrature segments never straddle a jump.
  std::pair<double, double> split(double x, double y, double probe_x, double probe_y) const {
    const double fv = f(probe_x, probe_y);
    if (fv == 0.0) return {0.0, 0.0};
    if (table == TableKind::Open) return split_open(fv, probe_x, probe_y);
    // The pole has no ray direction; borrow it from the segment being integrated.
    if (x == 0.5 && y == 0.0) return split_partial(fv, probe_x, probe_y);
    return split_partial(fv, x, y);
  }

  std::pair<double, double> split(double x, double y) const { return split(x, y, x, y); }

  std::vector<double> breaks_along_x(double y) const {
    std::vector<double> out;
    if (table == TableKind::Open) {
      out.push_back(y);
      out.push_back(1.0 - y);
    } else {
      out.push_back(0.5);
    }
    for (const Rect& r : rects) {
      out.push_back(r.x0);
      out.push_back(r.x1);
    }
    return out;
  }

  std::vector<double> breaks_along_y(double x) const {
    std::vector<double> out;
    if (table == TableKind::Open) {
      out.push_back(x);
      out.push_back(1.0 - x);
    }
    for (const Rect& r : rects) {
      out.push_back(r.y0);
      out.push_back(r.y1);
    }
    return out;
  }
};

/// Source primitives at cell centers.
///   bx(i, k) = int_0^{x_i} f1(xi, y_k) dxi, i = 0..M+1 (ghost columns), k = 0..M-1
///   by(i, k) = int_0^{y_k} f2(x_i, eta) deta, i = 0..M-1, k = 0..M+1 (ghost rows)
struct SourceTables2D {
  Field2D bx;
  Field2D by;
};

inline SourceTables2D build_B_2d(const SourceSpec2D& spec, const Grid2D& grid) {
  const std::size_t m = grid.cells();
  SourceTables2D t{Field2D(m + 2, m), Field2D(m, m + 2)};
  for (std::size_t k = 0; k < m; ++k) {
    const double y = grid.center(static_cast<std::ptrdiff_t>(k + 1));
    const auto row = detail::primitive_at_centers(
        grid.axis(), spec.breaks_along_x(y),
        [&](double x, double probe) { return spec.split(x, y, probe, y).first; });
    for (std::size_t i = 0; i < m + 2; ++i) t.bx(i, k) = row[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double x = grid.center(static_cast<std::ptrdiff_t>(i + 1));
    const auto col = detail::primitive_at_centers(
        grid.axis(), spec.breaks_along_y(x),
        [&](double y, double probe) { return spec.split(x, y, x, probe).second; });
    for (std::size_t k = 0; k < m + 2; ++k) t.by(i, k) = col[k];
  }
  return t;
}

}  // namespace sandpile
