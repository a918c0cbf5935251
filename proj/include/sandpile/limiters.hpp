#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

namespace sandpile {

/// minmod(a_1, ..., a_m): the common sign times the smallest magnitude when all
/// arguments are strictly positive or all strictly negative, otherwise 0.
template <std::floating_point T>
constexpr T minmod(std::span<const T> args) {
  if (args.empty()) return T(0);
  const bool positive = args[0] > T(0);
  const bool negative = args[0] < T(0);
  if (!positive && !negative) return T(0);
  T smallest = std::abs(args[0]);
  for (const T a : args.subspan(1)) {
    if ((positive && !(a > T(0))) || (negative && !(a < T(0)))) return T(0);
    smallest = std::min(smallest, std::abs(a));
  }
  return positive ? smallest : -smallest;
}

template <std::floating_point T, std::same_as<T>... Rest>
constexpr T minmod(T first, Rest... rest) {
  const T args[] = {first, rest...};
  return minmod(std::span<const T>(args));
}

/// Limited MUSCL slope Dz_i = 2 theta minmod(z_i - z_{i-1}, (z_{i+1} - z_{i-1})/2, z_{i+1} - z_i).
template <std::floating_point T>
constexpr T limited_slope(T z_prev, T z, T z_next, T theta) {
  return T(2) * theta * minmod(z - z_prev, T(0.5) * (z_next - z_prev), z_next - z);
}

/// Interface values of the linear reconstruction inside one cell.
template <std::floating_point T>
struct CellTraces {
  T left;   // z_{i-1/2,R}
  T right;  // z_{i+1/2,L}
};

/// z_{i+1/2,L} = z_i + scale Dz_i / 2 and z_{i-1/2,R} = z_i - scale Dz_i / 2;
/// scale is the steady-state indicator (1 for the plain second-order scheme).
template <std::floating_point T>
constexpr CellTraces<T> reconstruct(T z, T slope, T scale = T(1)) {
  const T half = T(0.5) * scale * slope;
  return {z - half, z + half};
}

/// Slopes for a line of cell values; the first and last cells get zero slope.
inline void line_slopes(std::span<const double> z, double theta, std::span<double> out) {
  const std::size_t n = z.size();
  if (n == 0) return;
  out[0] = 0.0;
  out[n - 1] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = limited_slope(z[i - 1], z[i], z[i + 1], theta);
}

inline std::vector<double> line_slopes(std::span<const double> z, double theta) {
  std::vector<double> out(z.size());
  line_slopes(z, theta, out);
  return out;
}

/// Steady-state indicator Theta(e) = e^2 / (e^2 + dx^2).
template <std::floating_point T>
constexpr T steady_indicator(T residual, T dx) {
  const T e2 = residual * residual;
  return e2 / (e2 + dx * dx);
}

}  // namespace sandpile
