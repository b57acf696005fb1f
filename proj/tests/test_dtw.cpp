#include <functional>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "game/dtw.hpp"
#include "support.hpp"

namespace game {
namespace {

/// Every monotone, continuous path from (0,0) to (m-1,n-1), minimum summed cost.
double enumerate_paths(const std::vector<double>& x, const std::vector<double>& y) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += (x[i] - y[j]) * (x[i] - y[j]);
    if (i + 1 == x.size() && j + 1 == y.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < x.size()) walk(i + 1, j, acc);
    if (j + 1 < y.size()) walk(i, j + 1, acc);
    if (i + 1 < x.size() && j + 1 < y.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

TEST(Dtw, IdenticalSequencesFollowDiagonal) {
  const std::vector<double> x = {0.5, -1, 2, 2, 7};
  const auto r = dtw(x, x);
  EXPECT_EQ(r.distance, 0.0);
  ASSERT_EQ(r.path.pairs.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(r.path.pairs[i], std::make_pair(i + 1, i + 1));
}

TEST(Dtw, HandCase) {
  const std::vector<double> x = {1, 2, 3}, y = {2, 3, 4};
  const auto r = dtw(x, y);
  EXPECT_EQ(r.distance, 2.0);
  EXPECT_EQ(enumerate_paths(x, y), 2.0);
  EXPECT_EQ(dtw_oracle(x, y), 2.0);
  EXPECT_TRUE(r.path.valid(3, 3));
  EXPECT_EQ(path_cost(x, y, r.path), 2.0);
}

TEST(Dtw, SinglePoints) {
  const auto r = dtw(std::vector<double>{0}, std::vector<double>{5});
  EXPECT_EQ(r.distance, 25.0);
  ASSERT_EQ(r.path.pairs.size(), 1u);
  EXPECT_EQ(r.path.pairs[0], std::make_pair(std::size_t{1}, std::size_t{1}));
  EXPECT_EQ(dtw_oracle(std::vector<double>{7}, std::vector<double>{7}), 0.0);
}

TEST(Dtw, EmptyInputRejected) {
  EXPECT_THROW(dtw(std::vector<double>{}, std::vector<double>{1}), InvalidArgument);
}

TEST(Dtw, OracleLimitEnforced) {
  EXPECT_THROW(dtw_oracle(std::vector<double>(9, 0.0), std::vector<double>(8, 0.0)), InvalidArgument);
}

TEST(Dtw, RandomPairsMatchEnumeration) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = test::random_vector(rng, len(rng), -3, 3);
    const auto y = test::random_vector(rng, len(rng), -3, 3);
    const auto r = dtw(x, y);
    const double ref = enumerate_paths(x, y);
    ASSERT_NEAR(r.distance, ref, 1e-12) << "trial " << trial;
    ASSERT_NEAR(dtw_oracle(x, y), ref, 1e-12);
    ASSERT_TRUE(r.path.valid(x.size(), y.size()));
    ASSERT_NEAR(path_cost(x, y, r.path), r.distance, 1e-12);
    ASSERT_NEAR(dtw(y, x).distance, r.distance, 1e-12);
  }
}

TEST(Dtw, TieBreakPrefersDiagonal) {
  // All costs zero: the backtrack must take the diagonal whenever it ties.
  const std::vector<double> x(3, 1.0), y(5, 1.0);
  const auto r = dtw(x, y);
  EXPECT_EQ(r.path.pairs.front(), std::make_pair(std::size_t{1}, std::size_t{1}));
  EXPECT_EQ(r.path.pairs.size(), 5u);
  EXPECT_TRUE(r.path.valid(3, 5));
}

TEST(WarpingPath, ValidityRules) {
  WarpingPath p{{{1, 1}, {2, 2}, {3, 3}}};
  EXPECT_TRUE(p.valid(3, 3));
  EXPECT_FALSE(p.valid(3, 4));
  WarpingPath jump{{{1, 1}, {3, 3}}};
  EXPECT_FALSE(jump.valid(3, 3));
  WarpingPath back{{{1, 1}, {2, 2}, {1, 3}, {3, 3}}};
  EXPECT_FALSE(back.valid(3, 3));
  WarpingPath repeat{{{1, 1}, {1, 1}, {2, 2}}};
  EXPECT_FALSE(repeat.valid(2, 2));
}

}  // namespace
}  // namespace game
