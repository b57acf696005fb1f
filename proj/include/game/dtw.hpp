#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "game/error.hpp"

namespace game {

/// Aligned index pairs, 1-based, from (1,1) to (m,n).
struct WarpingPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  /// Boundary, monotonicity and continuity (with at least one index advancing per step).
  bool valid(std::size_t m, std::size_t n) const {
    if (pairs.empty() || pairs.front() != std::pair<std::size_t, std::size_t>{1, 1} ||
        pairs.back() != std::pair<std::size_t, std::size_t>{m, n})
      return false;
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      const auto [e0, f0] = pairs[i - 1];
      const auto [e1, f1] = pairs[i];
      if (e1 < e0 || f1 < f0) return false;
      if (e1 - e0 > 1 || f1 - f0 > 1) return false;
      if (e1 == e0 && f1 == f0) return false;
    }
    return true;
  }

  bool operator==(const WarpingPath&) const = default;
};

struct DtwResult {
  double distance = 0.0;
  WarpingPath path;
};

inline double dtw_point_cost(double a, double b) noexcept { return (a - b) * (a - b); }

/// Exact DTW with squared point cost. Backtracking prefers the diagonal, then
/// the vertical step (advance x only), then the horizontal one.
inline DtwResult dtw(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size(), n = y.size();
  if (m == 0 || n == 0) throw InvalidArgument("dtw needs two non-empty sequences");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // acc[(i)*(n+1) + j], row/col 0 are the infinite border.
  std::vector<double> acc((m + 1) * (n + 1), inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * (n + 1) + j]; };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      at(i, j) = dtw_point_cost(x[i - 1], y[j - 1]) +
                 std::min(at(i - 1, j - 1), std::min(at(i - 1, j), at(i, j - 1)));

  DtwResult result;
  result.distance = at(m, n);
  auto& path = result.path.pairs;
  std::size_t i = m, j = n;
  path.emplace_back(i, j);
  while (i > 1 || j > 1) {
    const double diag = at(i - 1, j - 1), vert = at(i - 1, j), horiz = at(i, j - 1);
    if (diag <= vert && diag <= horiz) {
      --i;
      --j;
    } else if (vert <= horiz) {
      --i;
    } else {
      --j;
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());
  return result;
}

/// Path cost: sum of squared differences over aligned pairs.
inline double path_cost(std::span<const double> x, std::span<const double> y,
                        const WarpingPath& path) {
  double s = 0.0;
  for (auto [e, f] : path.pairs) s += dtw_point_cost(x[e - 1], y[f - 1]);
  return s;
}

inline constexpr std::size_t kDtwOracleMaxCells = 64;

/// Minimum DTW cost by enumerating every valid warping path. Test oracle;
/// refuses inputs with m*n above kDtwOracleMaxCells.
inline double dtw_oracle(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size(), n = y.size();
  if (m == 0 || n == 0) throw InvalidArgument("dtw needs two non-empty sequences");
  if (m * n > kDtwOracleMaxCells) throw InvalidArgument("dtw_oracle enumeration bound exceeded");
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                    double cost) {
    cost += dtw_point_cost(x[i], y[j]);
    if (i == m - 1 && j == n - 1) {
      best = std::min(best, cost);
      return;
    }
    if (i + 1 < m && j + 1 < n) walk(i + 1, j + 1, cost);
    if (i + 1 < m) walk(i + 1, j, cost);
    if (j + 1 < n) walk(i, j + 1, cost);
  };
  walk(0, 0, 0.0);
  return best;
}

}  // namespace game
