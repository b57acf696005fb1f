#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "game/dtw.hpp"
#include "game/matrix.hpp"

namespace game {

/// Pairwise DTW distances between single-modal features, node order as given.
struct RelationGraph {
  Matrix adjacency;

  /// Upper triangle (i < j) row by row; the fusion input form of the graph.
  std::vector<double> upper_triangle() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < adjacency.rows(); ++i)
      for (std::size_t j = i + 1; j < adjacency.cols(); ++j) out.push_back(adjacency(i, j));
    return out;
  }
};

struct AttentionFeature {
  std::vector<double> values;      ///< concatenated attended vectors
  std::vector<std::size_t> dims;   ///< length of each block (the benchmark lengths)
};

struct CrossModalConfig {
  /// Weights are softmax(sign * distance); -1 favours the closest features.
  int softmax_sign = -1;
};

inline RelationGraph relation_graph(std::span<const std::vector<double>> feats) {
  const std::size_t n = feats.size();
  RelationGraph g{Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dtw(feats[i], feats[j]).distance;
      g.adjacency(i, j) = d;
      g.adjacency(j, i) = d;
    }
  return g;
}

inline std::vector<double> attention_weights(std::span<const double> distances, int sign = -1) {
  if (sign != 1 && sign != -1) throw InvalidArgument("softmax sign must be +1 or -1");
  if (distances.empty()) throw InvalidArgument("attention needs at least one distance");
  std::vector<double> w(distances.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(distances[i])) throw InvalidArgument("attention distances must be finite");
    w[i] = sign * distances[i];
    top = std::max(top, w[i]);
  }
  double sum = 0.0;
  for (double& v : w) sum += (v = std::exp(v - top));
  for (double& v : w) v /= sum;
  return w;
}

namespace detail {

/// Mean of partner values aligned to each benchmark index along a warping path.
inline std::vector<double> aligned_means(std::span<const double> partner, const WarpingPath& path,
                                         std::size_t bench_len) {
  std::vector<double> sum(bench_len, 0.0);
  std::vector<std::size_t> count(bench_len, 0);
  for (auto [t, u] : path.pairs) {
    sum[t - 1] += partner[u - 1];
    ++count[t - 1];
  }
  for (std::size_t t = 0; t < bench_len; ++t) sum[t] /= static_cast<double>(count[t]);
  return sum;
}

}  // namespace detail

/// Benchmark vector plus the weighted, DTW-aligned contribution of every feature
/// (the benchmark itself included) using caller-supplied weights.
inline std::vector<double> attended_vector(std::size_t benchmark,
                                           std::span<const std::vector<double>> feats,
                                           std::span<const double> weights) {
  if (benchmark >= feats.size()) throw InvalidArgument("benchmark index out of range");
  if (weights.size() != feats.size()) throw InvalidArgument("one weight per feature required");
  const auto& bench = feats[benchmark];
  std::vector<double> out = bench;
  for (std::size_t j = 0; j < feats.size(); ++j) {
    const auto aligned = detail::aligned_means(feats[j], dtw(bench, feats[j]).path, bench.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += weights[j] * aligned[t];
  }
  return out;
}

namespace detail {

inline std::vector<double> attended_from(std::size_t benchmark,
                                         std::span<const std::vector<double>> feats,
                                         std::span<const DtwResult> results, int sign) {
  std::vector<double> d(feats.size());
  for (std::size_t j = 0; j < feats.size(); ++j) d[j] = results[j].distance;
  const auto w = attention_weights(d, sign);
  const auto& bench = feats[benchmark];
  std::vector<double> out = bench;
  for (std::size_t j = 0; j < feats.size(); ++j) {
    const auto aligned = aligned_means(feats[j], results[j].path, bench.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += w[j] * aligned[t];
  }
  return out;
}

}  // namespace detail

inline std::vector<double> attended_vector(std::size_t benchmark,
                                           std::span<const std::vector<double>> feats,
                                           const CrossModalConfig& cfg = {}) {
  if (benchmark >= feats.size()) throw InvalidArgument("benchmark index out of range");
  std::vector<DtwResult> results;
  for (const auto& f : feats) results.push_back(dtw(feats[benchmark], f));
  return detail::attended_from(benchmark, feats, results, cfg.softmax_sign);
}

inline AttentionFeature attention_feature(std::span<const std::vector<double>> feats,
                                          const CrossModalConfig& cfg = {}) {
  AttentionFeature out;
  for (std::size_t k = 0; k < feats.size(); ++k) {
    const auto v = attended_vector(k, feats, cfg);
    out.values.insert(out.values.end(), v.begin(), v.end());
    out.dims.push_back(v.size());
  }
  return out;
}

struct CrossModalFeatures {
  RelationGraph graph;
  AttentionFeature attention;
};

/// Both cross-modal features from a single DTW per ordered pair; identical to
/// relation_graph() and attention_feature() computed separately.
inline CrossModalFeatures crossmodal_features(std::span<const std::vector<double>> feats,
                                              const CrossModalConfig& cfg = {}) {
  const std::size_t n = feats.size();
  CrossModalFeatures out{RelationGraph{Matrix(n, n, 0.0)}, {}};
  std::vector<std::vector<DtwResult>> res(n, std::vector<DtwResult>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) res[i][j] = dtw(feats[i], feats[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      out.graph.adjacency(i, j) = res[i][j].distance;
      out.graph.adjacency(j, i) = res[i][j].distance;
    }
  for (std::size_t k = 0; k < n; ++k) {
    const auto v = detail::attended_from(k, feats, res[k], cfg.softmax_sign);
    out.attention.values.insert(out.attention.values.end(), v.begin(), v.end());
    out.attention.dims.push_back(v.size());
  }
  return out;
}

}  // namespace game
