#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sandpile {

enum class SchemeKind { FO, SO, SOTheta };
enum class TableKind { Open, PartiallyOpen };

inline std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::FO: return "fo";
    case SchemeKind::SO: return "so";
    case SchemeKind::SOTheta: return "so-theta";
  }
  return "?";
}

inline std::string to_string(TableKind kind) {
  return kind == TableKind::Open ? "open" : "partial";
}

/// Scheme selection and time-step parameters shared by the 1D and 2D solvers.
struct SchemeConfig {
  SchemeKind kind = SchemeKind::SOTheta;
  double theta = 0.5;   // limiter parameter in [0,1]
  double lambda = 0.45; // dt / dx
  double t_final = 1.0;
  TableKind table = TableKind::Open;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0,1]");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(t_final >= 0.0)) throw ConfigError("t_final must be nonnegative");
  }

  /// Limiter parameter actually used by the reconstruction (FO never reconstructs).
  double effective_theta() const { return kind == SchemeKind::FO ? 0.0 : theta; }
};

/// Uniform grid on [0,1] with M cells. Vertex j (0..M) sits at x_{j+1/2} = j/M,
/// so both end points and, for even M, the midpoint are exact.
class Grid1D {
 public:
  explicit Grid1D(std::size_t cells) : m_(cells) {
    if (cells < 4) throw ConfigError("grid needs at least 4 cells, got " + std::to_string(cells));
  }

  std::size_t cells() const noexcept { return m_; }
  std::size_t vertices() const noexcept { return m_ + 1; }
  double dx() const noexcept { return 1.0 / static_cast<double>(m_); }

  /// x_{j+1/2}, j = 0..M.
  double vertex(std::size_t j) const noexcept {
    return static_cast<double>(j) / static_cast<double>(m_);
  }

  /// Center of cell C_i for the 1-based paper index i; i = 0 and i = M+1 give
  /// the ghost centers just outside the domain.
  double center(std::ptrdiff_t i) const noexcept {
    return static_cast<double>(2 * i - 1) / static_cast<double>(2 * m_);
  }

 private:
  std::size_t m_;
};

/// Uniform square grid on [0,1]^2 with M cells per axis and spacing h = 1/M.
class Grid2D {
 public:
  explicit Grid2D(std::size_t cells) : axis_(cells) {}

  std::size_t cells() const noexcept { return axis_.cells(); }
  double h() const noexcept { return axis_.dx(); }
  double vertex(std::size_t j) const noexcept { return axis_.vertex(j); }
  double center(std::ptrdiff_t i) const noexcept { return axis_.center(i); }
  const Grid1D& axis() const noexcept { return axis_; }

 private:
  Grid1D axis_;
};

/// Dense row-major 2D array addressed as (i, k) with i the x index.
class Field2D {
 public:
  Field2D() = default;
  Field2D(std::size_t nx, std::size_t ny, double fill = 0.0)
      : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

  double& operator()(std::size_t i, std::size_t k) noexcept { return data_[k * nx_ + i]; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return data_[k * nx_ + i]; }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Field2D&) const = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> data_;
};

/// Discrete 1D solution. u[j] approximates u(x_{j+1/2}), j = 0..M; v[i-1]
/// holds the cell average v_i of C_i (the paper's 1-based cell index minus one).
struct State1D {
  std::vector<double> u;
  std::vector<double> v;

  static State1D zeros(const Grid1D& grid) {
    return {std::vector<double>(grid.vertices(), 0.0), std::vector<double>(grid.cells(), 0.0)};
  }

  bool operator==(const State1D&) const = default;
};

/// Discrete 2D solution. u(j, l) at vertex (x_{j+1/2}, y_{l+1/2}), j,l = 0..M;
/// v(i-1, k-1) holds the average over cell C_{i,k}.
struct State2D {
  Field2D u;
  Field2D v;

  static State2D zeros(const Grid2D& grid) {
    const std::size_t m = grid.cells();
    return {Field2D(m + 1, m + 1), Field2D(m, m)};
  }

  bool operator==(const State2D&) const = default;
};

inline void check_dimensions(const State1D& state, const Grid1D& grid) {
  if (state.u.size() != grid.vertices() || state.v.size() != grid.cells())
    throw ConfigError("1D state dimensions do not match the grid");
}

inline void check_dimensions(const State2D& state, const Grid2D& grid) {
  const std::size_t m = grid.cells();
  if (state.u.nx() != m + 1 || state.u.ny() != m + 1 || state.v.nx() != m || state.v.ny() != m)
    throw ConfigError("2D state dimensions do not match the grid");
}

/// Cell slopes alpha_i = (u_{i+1/2} - u_{i-1/2}) / dx, stored 0-based.
inline std::vector<double> derive_alpha_1d(const State1D& state, const Grid1D& grid) {
  check_dimensions(state, grid);
  const double dx = grid.dx();
  std::vector<double> alpha(grid.cells());
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = (state.u[i + 1] - state.u[i]) / dx;
  return alpha;
}

/// Difference quotients of u along grid lines and their cell-centered averages.
///   alpha_edge(i, l): cell column i (0-based), vertex row l   -> size M x (M+1)
///   beta_edge(j, k):  vertex column j, cell row k (0-based)   -> size (M+1) x M
///   alpha_cell, beta_cell: M x M averages of the two bounding edges.
struct SlopeFields2D {
  Field2D alpha_edge;
  Field2D beta_edge;
  Field2D alpha_cell;
  Field2D beta_cell;
};

inline SlopeFields2D derive_alpha_beta_2d(const Field2D& u, double h) {
  const std::size_t m = u.nx() - 1;
  SlopeFields2D s{Field2D(m, m + 1), Field2D(m + 1, m), Field2D(m, m), Field2D(m, m)};
  for (std::size_t l = 0; l <= m; ++l)
    for (std::size_t i = 0; i < m; ++i) s.alpha_edge(i, l) = (u(i + 1, l) - u(i, l)) / h;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j <= m; ++j) s.beta_edge(j, k) = (u(j, k + 1) - u(j, k)) / h;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      s.alpha_cell(i, k) = 0.5 * (s.alpha_edge(i, k + 1) + s.alpha_edge(i, k));
      s.beta_cell(i, k) = 0.5 * (s.beta_edge(i + 1, k) + s.beta_edge(i, k));
    }
  }
  return s;
}

inline SlopeFields2D derive_alpha_beta_2d(const State2D& state, const Grid2D& grid) {
  check_dimensions(state, grid);
  return derive_alpha_beta_2d(state.u, grid.h());
}

}  // namespace sandpile
