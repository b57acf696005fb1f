#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "game/dataset.hpp"
#include "game/embrace.hpp"
#include "game/parallel.hpp"
#include "game/pipeline.hpp"
#include "game/trainer.hpp"

namespace game {

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;  ///< record indices, ascending
  bool stratified = true;                       ///< false if it fell back to plain k-fold
  std::vector<std::string> warnings;

  /// Every index not in fold f, ascending.
  std::vector<std::size_t> training(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Shuffles each class, then deals positives and then negatives round-robin
/// across the folds (the dealing position carries over between classes).
inline FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k,
                                       std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (n < k) throw InvalidArgument("cannot split " + std::to_string(n) + " records into " +
                                   std::to_string(k) + " folds");
  Rng rng(seed);
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i] ? 1 : 0].push_back(i);
  FoldAssignment fa;
  fa.k = k;
  fa.folds.resize(k);
  std::vector<std::vector<std::size_t>> groups;
  if (by_class[0].size() < k || by_class[1].size() < k) {
    fa.stratified = false;
    fa.warnings.push_back("a class has fewer than k members; using plain k-fold");
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    groups.push_back(std::move(all));
  } else {
    groups = {by_class[1], by_class[0]};
  }
  std::size_t deal = 0;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (auto idx : g) fa.folds[deal++ % k].push_back(idx);
  }
  for (auto& f : fa.folds) std::sort(f.begin(), f.end());
  return fa;
}

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 2>, 2> counts{};

  void add(int truth, int predicted) { ++counts[truth ? 1 : 0][predicted ? 1 : 0]; }
  std::size_t total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;  ///< support-weighted
  double recall = 0.0;     ///< support-weighted
  double f1 = 0.0;         ///< harmonic mean of weighted precision and recall
};

/// Support weights w_i = Sn_i / Tn, no further division by the class count;
/// 0/0 precision or recall is 0.
inline Metrics metrics(const ConfusionMatrix& cm) {
  const double total = static_cast<double>(cm.total());
  if (total < 1) throw InvalidArgument("confusion matrix is empty");
  const auto& c = cm.counts;
  Metrics m;
  m.accuracy = static_cast<double>(c[0][0] + c[1][1]) / total;
  for (std::size_t i = 0; i < 2; ++i) {
    const double tp = static_cast<double>(c[i][i]);
    const double support = static_cast<double>(c[i][0] + c[i][1]);
    const double predicted = static_cast<double>(c[0][i] + c[1][i]);
    const double w = support / total;
    m.precision += w * (predicted > 0 ? tp / predicted : 0.0);
    m.recall += w * (support > 0 ? tp / support : 0.0);
  }
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

using NormalizedConfusion = std::array<std::array<double, 2>, 2>;

/// Each row divided by its total; empty rows stay zero.
inline NormalizedConfusion row_normalize(const std::array<std::array<double, 2>, 2>& counts) {
  NormalizedConfusion out{};
  for (std::size_t r = 0; r < 2; ++r) {
    const double s = counts[r][0] + counts[r][1];
    for (std::size_t c = 0; c < 2; ++c) out[r][c] = s > 0 ? counts[r][c] / s : 0.0;
  }
  return out;
}

enum class CmOrder { normalize_then_average, average_then_normalize };

struct Summary {
  double mean = 0.0, max = 0.0, min = 0.0;
};

inline Summary summarize(std::span<const double> v) {
  if (v.empty()) return {};
  Summary s{0.0, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (double x : v) {
    s.mean += x;
    s.max = std::max(s.max, x);
    s.min = std::min(s.min, x);
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

inline constexpr std::array<std::string_view, 4> kMetricNames = {
    "accuracy", "precision_weighted", "recall_weighted", "f1_weighted"};

struct MetricsReport {
  std::vector<Metrics> folds;
  std::vector<ConfusionMatrix> confusion;
  std::array<Summary, 4> aggregate{};  ///< in kMetricNames order
  NormalizedConfusion normalized_confusion{};
  CmOrder cm_order = CmOrder::normalize_then_average;
  Summary majority_accuracy;

  const Summary& accuracy() const { return aggregate[0]; }
  const Summary& f1() const { return aggregate[3]; }
};

inline MetricsReport assemble_report(std::vector<ConfusionMatrix> cms, CmOrder order,
                                     std::span<const double> majority_acc = {}) {
  MetricsReport rep;
  rep.cm_order = order;
  rep.confusion = std::move(cms);
  std::array<std::vector<double>, 4> cols;
  std::array<std::array<double, 2>, 2> pooled{};
  NormalizedConfusion avg{};
  for (const auto& cm : rep.confusion) {
    const auto m = metrics(cm);
    rep.folds.push_back(m);
    cols[0].push_back(m.accuracy);
    cols[1].push_back(m.precision);
    cols[2].push_back(m.recall);
    cols[3].push_back(m.f1);
    std::array<std::array<double, 2>, 2> counts{};
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        counts[r][c] = static_cast<double>(cm.counts[r][c]);
        pooled[r][c] += counts[r][c];
      }
    const auto norm = row_normalize(counts);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        avg[r][c] += norm[r][c] / static_cast<double>(rep.confusion.size());
  }
  for (std::size_t i = 0; i < 4; ++i) rep.aggregate[i] = summarize(cols[i]);
  rep.normalized_confusion = order == CmOrder::normalize_then_average ? avg : row_normalize(pooled);
  rep.majority_accuracy = summarize(majority_acc);
  return rep;
}

struct CvOptions {
  TrainConfig train;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  PipelineOptions pipeline;
  CmOrder cm_order = CmOrder::normalize_then_average;
  bool keep_models = false;
};

struct FoldResult {
  std::vector<std::size_t> validation;  ///< record indices
  std::vector<int> predictions;         ///< aligned with `validation`
  ConfusionMatrix confusion;
  double majority_accuracy = 0.0;
  TrainHistory history;
  std::vector<std::size_t> fit_indices;
  std::vector<double> contribution_sum;  ///< summed docking_contribution over validation records
  std::size_t contribution_count = 0;
  std::optional<FusionModel> model;
};

struct CvResult {
  TaskId task = TaskId::overall;
  FoldAssignment assignment;
  std::vector<FoldResult> folds;
  MetricsReport report;
};

inline std::uint64_t folds_seed(std::uint64_t master) { return derive_seed(master, "folds"); }

/// Stratified k-fold evaluation of the fusion model on one task. Each fold
/// fits standardisation on its training records, trains a fresh model seeded
/// from (master seed XOR fold index) and predicts the held-out records.
inline CvResult cross_validate(const Dataset& ds, const FusedDataset& fused, TaskId task,
                               const CvOptions& opt) {
  opt.train.validate();
  const auto labels = ds.labels(task);
  CvResult res;
  res.task = task;
  res.assignment = stratified_folds(labels, opt.k, folds_seed(opt.seed));
  res.folds.resize(opt.k);

  parallel_for(opt.k, opt.workers, [&](std::size_t f) {
    FoldResult& out = res.folds[f];
    const auto train_idx = res.assignment.training(f);
    const auto prepared = prepare_fold(fused, train_idx, opt.pipeline);

    std::vector<FusionInput> train_in;
    std::vector<int> train_y;
    for (auto i : train_idx) {
      train_in.push_back(prepared.inputs[i]);
      train_y.push_back(labels[i]);
    }
    const std::uint64_t seed = fold_seed(opt.seed, f);
    FusionModel model(fusion_config(prepared, opt.train.embrace_size));
    model.initialize(derive_seed(seed, "init"));
    TrainConfig tc = opt.train;
    tc.seed = derive_seed(seed, "train");
    out.history = train(model, train_in, train_y, tc);

    const int majority = majority_baseline(train_y).predict();
    std::size_t majority_hits = 0;
    out.validation = res.assignment.folds[f];
    out.contribution_sum.assign(model.inputs(), 0.0);
    for (auto i : out.validation) {
      const int pred = predict(prepared.inputs[i], model);
      out.predictions.push_back(pred);
      out.confusion.add(labels[i], pred);
      majority_hits += labels[i] == majority;
      const auto contrib = docking_contribution(prepared.inputs[i], model);
      for (std::size_t k = 0; k < contrib.size(); ++k) out.contribution_sum[k] += contrib[k];
      ++out.contribution_count;
    }
    out.majority_accuracy =
        static_cast<double>(majority_hits) / static_cast<double>(out.validation.size());
    out.fit_indices = prepared.fit_indices;
    if (opt.keep_models) out.model = std::move(model);
  });

  std::vector<ConfusionMatrix> cms;
  std::vector<double> majority;
  for (const auto& f : res.folds) {
    cms.push_back(f.confusion);
    majority.push_back(f.majority_accuracy);
  }
  res.report = assemble_report(std::move(cms), opt.cm_order, majority);
  return res;
}

inline CvResult cross_validate(const Dataset& ds, TaskId task, const CvOptions& opt) {
  return cross_validate(ds, fuse_dataset(ds), task, opt);
}

/// Same folds and standardisation, majority-class predictor.
inline MetricsReport cross_validate_majority(const Dataset& ds, TaskId task, const CvOptions& opt) {
  const auto labels = ds.labels(task);
  const auto fa = stratified_folds(labels, opt.k, folds_seed(opt.seed));
  std::vector<ConfusionMatrix> cms;
  for (std::size_t f = 0; f < fa.k; ++f) {
    std::vector<int> ty;
    for (auto i : fa.training(f)) ty.push_back(labels[i]);
    const int pred = majority_baseline(ty).predict();
    ConfusionMatrix cm;
    for (auto i : fa.folds[f]) cm.add(labels[i], pred);
    cms.push_back(cm);
  }
  return assemble_report(std::move(cms), opt.cm_order);
}

/// Same folds, a linear probe on one single-modal input (standardised per fold).
inline MetricsReport cross_validate_probe(const Dataset& ds, const FusedDataset& fused, TaskId task,
                                          ModalityId modality, const CvOptions& opt) {
  if (!is_single_modal(modality)) throw InvalidArgument("probe needs a single-modal input");
  const auto labels = ds.labels(task);
  const auto fa = stratified_folds(labels, opt.k, folds_seed(opt.seed));
  std::vector<ConfusionMatrix> cms(fa.k);
  const std::size_t m = index(modality);
  parallel_for(fa.k, opt.workers, [&](std::size_t f) {
    const auto train_idx = fa.training(f);
    std::vector<std::vector<double>> fit;
    std::vector<int> ty;
    for (auto i : train_idx)
      if (fused.vectors[i][m]) {
        fit.push_back(*fused.vectors[i][m]);
        ty.push_back(labels[i]);
      }
    if (fit.empty()) throw DataError("probe modality unavailable in training split");
    const auto stats = zscore_fit(fit);
    for (auto& v : fit) v = zscore_apply(v, stats);
    TrainConfig tc = opt.train;
    tc.seed = derive_seed(fold_seed(opt.seed, f), "probe");
    const auto probe = train_linear_probe(fit, ty, tc);
    const int fallback = majority_baseline(ty).predict();
    for (auto i : fa.folds[f]) {
      const int pred = fused.vectors[i][m]
                           ? probe.predict(zscore_apply(*fused.vectors[i][m], stats))
                           : fallback;
      cms[f].add(labels[i], pred);
    }
  });
  return assemble_report(std::move(cms), opt.cm_order);
}

}  // namespace game
