#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "sandpile/limiters.hpp"

using namespace sandpile;

TEST(Minmod, Examples) {
  EXPECT_EQ(minmod(1.0, 2.0, 3.0), 1.0);
  EXPECT_EQ(minmod(-1.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(minmod(-2.0, -3.0, -1.0), -1.0);
  EXPECT_EQ(minmod(0.0, 5.0, 7.0), 0.0);
  EXPECT_EQ(minmod(4.0), 4.0);
}

TEST(Minmod, MagnitudeAndSign) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int n = 0; n < 5000; ++n) {
    const double a = d(rng), b = d(rng), c = d(rng);
    const double m = minmod(a, b, c);
    EXPECT_LE(std::abs(m), std::min({std::abs(a), std::abs(b), std::abs(c)}));
    if (m != 0.0) {
      EXPECT_EQ(m > 0, a > 0);
      EXPECT_EQ(m > 0, b > 0);
      EXPECT_EQ(m > 0, c > 0);
    }
  }
}

TEST(Slope, Examples) {
  EXPECT_EQ(limited_slope(0.0, 1.0, 2.0, 0.5), 1.0);
  EXPECT_EQ(limited_slope(0.0, 1.0, 0.0, 0.5), 0.0);
  EXPECT_EQ(limited_slope(0.0, 1.0, 2.0, 0.0), 0.0);
}

TEST(Reconstruct, Examples) {
  const auto t = reconstruct(1.0, 0.2, 1.0);
  EXPECT_DOUBLE_EQ(t.right, 1.1);
  EXPECT_DOUBLE_EQ(t.left, 0.9);
  const auto z = reconstruct(0.37, 0.8, 0.0);
  EXPECT_EQ(z.left, 0.37);
  EXPECT_EQ(z.right, 0.37);
  const double s = limited_slope(0.0, 1.0, 2.0, 0.5);
  const auto m = reconstruct(1.0, s);
  EXPECT_GE(m.left, 0.0);
  EXPECT_LE(m.right, 2.0);
}

TEST(Reconstruct, TracesStayBetweenNeighbours) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0), th(0.0, 1.0);
  for (int n = 0; n < 5000; ++n) {
    std::vector<double> z{d(rng), d(rng), d(rng), d(rng)};
    const double theta = th(rng);
    const double scale = th(rng);
    const auto s = line_slopes(z, theta);
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
      const double lo = std::min(z[i], z[i + 1]), hi = std::max(z[i], z[i + 1]);
      const double right_of_i = reconstruct(z[i], s[i], scale).right;
      const double left_of_next = reconstruct(z[i + 1], s[i + 1], scale).left;
      EXPECT_GE(right_of_i, lo - 1e-15);
      EXPECT_LE(right_of_i, hi + 1e-15);
      EXPECT_GE(left_of_next, lo - 1e-15);
      EXPECT_LE(left_of_next, hi + 1e-15);
    }
  }
}

TEST(LineSlopes, EndsAreFlat) {
  const std::vector<double> z{0.0, 1.0, 2.0, 3.0, 4.0};
  const auto s = line_slopes(z, 1.0);
  EXPECT_EQ(s.front(), 0.0);
  EXPECT_EQ(s.back(), 0.0);
  EXPECT_EQ(s[2], 2.0);
}

TEST(SteadyIndicator, Values) {
  EXPECT_EQ(steady_indicator(0.0, 0.01), 0.0);
  EXPECT_DOUBLE_EQ(steady_indicator(0.01, 0.01), 0.5);
  EXPECT_GT(steady_indicator(10.0, 0.01), 1.0 - 1e-5);
  double prev = 0.0;
  for (double e = 1e-4; e < 1.0; e *= 1.5) {
    const double t = steady_indicator(e, 0.01);
    EXPECT_GT(t, prev);
    EXPECT_LE(t, 1.0);
    prev = t;
  }
}
