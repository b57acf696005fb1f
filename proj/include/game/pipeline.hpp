#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "game/crossmodal.hpp"
#include "game/dataset.hpp"
#include "game/embrace.hpp"
#include "game/features.hpp"

namespace game {

/// Time-averaged single-modal vectors of every record; fold-independent.
struct FusedDataset {
  const Dataset* dataset = nullptr;
  std::vector<std::array<std::optional<std::vector<double>>, kSingleModalCount>> vectors;
};

inline FusedDataset fuse_dataset(const Dataset& ds) {
  FusedDataset out{&ds, {}};
  out.vectors.resize(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t m = 0; m < kSingleModalCount; ++m)
      if (const auto& f = ds[r].features[m]) out.vectors[r][m] = task_fuse(f->values);
  return out;
}

using InputMask = std::array<bool, kFusionInputCount>;

struct PipelineOptions {
  CrossModalConfig crossmodal;
  /// Fusion inputs removed dataset-wide. Removing a single-modal input also
  /// drops it from both cross-modal features.
  InputMask excluded{};
};

/// Fusion inputs for every record, standardised with statistics fitted on the
/// training records only.
struct PreparedFold {
  std::vector<FusionInput> inputs;  ///< index-aligned with the dataset
  std::array<std::size_t, kFusionInputCount> dims{};
  std::vector<std::size_t> fit_indices;  ///< records the z-score statistics saw
};

inline FusionConfig fusion_config(const PreparedFold& fold, std::size_t embrace_size) {
  FusionConfig cfg;
  for (std::size_t k = 0; k < kFusionInputCount; ++k) {
    cfg.names.emplace_back(kModalityNames[k]);
    cfg.input_dims.push_back(fold.dims[k]);
  }
  cfg.embrace_size = embrace_size;
  return cfg;
}

namespace detail {

/// Fits on the available training rows of one input, applies to all available rows.
inline void standardize_input(std::vector<FusionInput>& inputs, std::size_t k,
                              std::span<const std::size_t> train) {
  std::vector<std::vector<double>> fit;
  for (auto r : train)
    if (inputs[r].available[k]) fit.push_back(inputs[r].x[k]);
  if (fit.empty()) {
    for (auto& in : inputs) {
      in.available[k] = false;
      in.x[k].clear();
    }
    return;
  }
  const auto stats = zscore_fit(fit);
  for (auto& in : inputs)
    if (in.available[k]) in.x[k] = zscore_apply(in.x[k], stats);
}

}  // namespace detail

inline PreparedFold prepare_fold(const FusedDataset& fused, std::span<const std::size_t> train,
                                 const PipelineOptions& opt = {}) {
  const std::size_t n = fused.vectors.size();
  PreparedFold fold;
  fold.fit_indices.assign(train.begin(), train.end());
  fold.inputs.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& in = fold.inputs[r];
    in.x.resize(kFusionInputCount);
    in.available.assign(kFusionInputCount, false);
    for (std::size_t m = 0; m < kSingleModalCount; ++m)
      if (fused.vectors[r][m] && !opt.excluded[m]) {
        in.x[m] = *fused.vectors[r][m];
        in.available[m] = true;
      }
  }
  for (std::size_t m = 0; m < kSingleModalCount; ++m)
    if (!opt.excluded[m]) detail::standardize_input(fold.inputs, m, train);

  std::vector<std::size_t> included;
  for (std::size_t m = 0; m < kSingleModalCount; ++m)
    if (!opt.excluded[m]) included.push_back(m);
  const std::size_t graph = index(ModalityId::relation_graph), attn = index(ModalityId::attention);
  const bool want_graph = !opt.excluded[graph] && included.size() >= 2;
  const bool want_attn = !opt.excluded[attn] && !included.empty();
  if (want_graph || want_attn) {
    std::vector<std::vector<double>> feats(included.size());
    for (auto& in : fold.inputs) {
      bool complete = true;
      for (std::size_t i = 0; i < included.size(); ++i) {
        if (!in.available[included[i]]) {
          complete = false;
          break;
        }
        feats[i] = in.x[included[i]];
      }
      if (!complete) continue;  // cross-modal inputs unavailable for this record
      auto cross = crossmodal_features(feats, opt.crossmodal);
      if (want_graph) {
        in.x[graph] = cross.graph.upper_triangle();
        in.available[graph] = true;
      }
      if (want_attn) {
        in.x[attn] = std::move(cross.attention.values);
        in.available[attn] = true;
      }
    }
    if (want_graph) detail::standardize_input(fold.inputs, graph, train);
    if (want_attn) detail::standardize_input(fold.inputs, attn, train);
  }
  for (auto& in : fold.inputs)
    for (std::size_t k = 0; k < kFusionInputCount; ++k)
      if (in.available[k]) fold.dims[k] = in.x[k].size();
  return fold;
}

}  // namespace game
