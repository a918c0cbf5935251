#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>

namespace sandpile {

/// Erosion/deposition flux for the standing layer at an interface:
/// G(a,b,c,d) = max{(|max(a,0)| - 1) b, (|min(c,0)| - 1) d}
/// with (a,b) the left slope/rolling-layer trace and (c,d) the right one.
template <std::floating_point T>
constexpr T flux_G(T a, T b, T c, T d) {
  const T left = (std::abs(std::max(a, T(0))) - T(1)) * b;
  const T right = (std::abs(std::min(c, T(0))) - T(1)) * d;
  return std::max(left, right);
}

/// Which case of the rolling-layer flux is active.
enum class HBranch {
  BothNonPositive,  // a <= 0, c <= 0: upwind from the left
  BothPositiveLeft, // a > 0, c >= 0: upwind from the right
  Converging,       // a > 0, c < 0: crest between the traces
  DivergeLeft,      // a <= 0, c > 0, b > d
  DivergeRight,     // a <= 0, c > 0, b < d
  DivergeEqual,     // a <= 0, c > 0, b == d
};

template <std::floating_point T>
constexpr HBranch h_branch(T a, T b, T c, T d) {
  if (a <= T(0) && c <= T(0)) return HBranch::BothNonPositive;
  if (a > T(0) && c >= T(0)) return HBranch::BothPositiveLeft;
  if (a > T(0)) return HBranch::Converging;
  // a <= 0 and c > 0; exact comparison: the tie only occurs for traces built
  // by identical arithmetic.
  if (b > d) return HBranch::DivergeLeft;
  if (b < d) return HBranch::DivergeRight;
  return HBranch::DivergeEqual;
}

/// Rolling-layer transport flux with the source primitive absorbed,
/// H(a, b, c, d, e1, e2) where e1, e2 are the left/right traces of B.
template <std::floating_point T>
constexpr T flux_H(T a, T b, T c, T d, T e1, T e2) {
  switch (h_branch(a, b, c, d)) {
    case HBranch::BothNonPositive:
    case HBranch::DivergeLeft:
      return -a * b - e1;
    case HBranch::BothPositiveLeft:
    case HBranch::DivergeRight:
      return -c * d - e2;
    case HBranch::Converging:
      return (-c * e1 + a * e2) / (c - a);
    case HBranch::DivergeEqual:
      return T(-0.5) * (a * b + c * d + e1 + e2);
  }
  return T(0);
}

/// Exchange source (|alpha| - 1) v added to the rolling layer.
template <std::floating_point T>
constexpr T source_S(T alpha, T v) {
  return (std::abs(alpha) - T(1)) * v;
}

}  // namespace sandpile
