#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "game/evalharness.hpp"

namespace game {

// ---- label comorbidity ----

enum class ComorbidityMode { conditional, jaccard };

/// Over the eleven disorders (`overall` excluded). Conditional entries are
/// |i and j| / |j|; jaccard entries are |i and j| / |i or j|. Undefined entries
/// (empty denominator) are nullopt.
struct ComorbidityMatrix {
  ComorbidityMode mode = ComorbidityMode::conditional;
  std::array<std::array<std::optional<double>, kDisorderCount>, kDisorderCount> values{};
};

inline ComorbidityMatrix comorbidity(const Dataset& ds,
                                     ComorbidityMode mode = ComorbidityMode::conditional) {
  std::array<std::array<std::size_t, kDisorderCount>, kDisorderCount> both{};
  std::array<std::size_t, kDisorderCount> pos{};
  for (const auto& r : ds.records())
    for (std::size_t i = 0; i < kDisorderCount; ++i) {
      if (!r.labels[i]) continue;
      ++pos[i];
      for (std::size_t j = 0; j < kDisorderCount; ++j) both[i][j] += r.labels[j];
    }
  ComorbidityMatrix out{mode, {}};
  for (std::size_t i = 0; i < kDisorderCount; ++i)
    for (std::size_t j = 0; j < kDisorderCount; ++j) {
      const double inter = static_cast<double>(both[i][j]);
      const double denom = mode == ComorbidityMode::conditional
                               ? static_cast<double>(pos[j])
                               : static_cast<double>(pos[i] + pos[j]) - inter;
      if (denom > 0) out.values[i][j] = inter / denom;
    }
  return out;
}

// ---- cross prediction ----

/// [i][j]: mean fold accuracy of the task-i models scored against task-j labels.
using CrossPredictionMatrix = std::array<std::array<double, kTaskCount>, kTaskCount>;

/// Scores the held-out predictions of one CV run against another task's labels.
inline double cross_accuracy(const CvResult& cv, std::span<const int> labels) {
  std::vector<double> per_fold;
  for (const auto& f : cv.folds) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < f.validation.size(); ++i)
      hits += f.predictions[i] == labels[f.validation[i]];
    per_fold.push_back(static_cast<double>(hits) / static_cast<double>(f.validation.size()));
  }
  return summarize(per_fold).mean;
}

/// Builds the matrix from one CV run per task, `runs[i].task == task_at(i)`.
inline CrossPredictionMatrix cross_prediction(const Dataset& ds, std::span<const CvResult> runs) {
  if (runs.size() != kTaskCount) throw InvalidArgument("cross prediction needs one run per task");
  std::array<std::vector<int>, kTaskCount> labels;
  for (std::size_t j = 0; j < kTaskCount; ++j) labels[j] = ds.labels(task_at(j));
  CrossPredictionMatrix m{};
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (runs[i].task != task_at(i)) throw InvalidArgument("cross prediction runs out of task order");
    for (std::size_t j = 0; j < kTaskCount; ++j) m[i][j] = cross_accuracy(runs[i], labels[j]);
  }
  return m;
}

inline std::vector<CvResult> cross_validate_all(const Dataset& ds, const FusedDataset& fused,
                                                const CvOptions& opt) {
  std::vector<CvResult> runs;
  for (std::size_t t = 0; t < kTaskCount; ++t) runs.push_back(cross_validate(ds, fused, task_at(t), opt));
  return runs;
}

inline CrossPredictionMatrix cross_prediction(const Dataset& ds, const CvOptions& opt) {
  const auto fused = fuse_dataset(ds);
  const auto runs = cross_validate_all(ds, fused, opt);
  return cross_prediction(ds, runs);
}

// ---- modality ablation ----

struct AblationArm {
  ModalityId removed = ModalityId::expression;
  MetricsReport report;
  double delta_accuracy = 0.0;  ///< arm mean - full mean; negative is a decline
  double delta_f1 = 0.0;
};

struct AblationReport {
  TaskId task = TaskId::overall;
  MetricsReport full;
  std::vector<AblationArm> arms;
};

/// Re-runs CV with each listed input removed dataset-wide (same folds and
/// seeds as the full run) and reports metric deltas against the full model.
inline AblationReport ablation(const Dataset& ds, const FusedDataset& fused, TaskId task,
                               const CvOptions& opt, std::span<const ModalityId> removed) {
  std::size_t present = 0;
  for (std::size_t m = 0; m < kSingleModalCount; ++m)
    present += ds.dim(modality_at(m)).has_value() && !opt.pipeline.excluded[m];
  if (present < 2) throw InvalidArgument("ablation needs at least 2 available modalities");
  AblationReport rep;
  rep.task = task;
  rep.full = cross_validate(ds, fused, task, opt).report;
  for (auto m : removed) {
    CvOptions arm_opt = opt;
    arm_opt.pipeline.excluded[index(m)] = true;
    AblationArm arm;
    arm.removed = m;
    arm.report = cross_validate(ds, fused, task, arm_opt).report;
    arm.delta_accuracy = arm.report.accuracy().mean - rep.full.accuracy().mean;
    arm.delta_f1 = arm.report.f1().mean - rep.full.f1().mean;
    rep.arms.push_back(std::move(arm));
  }
  return rep;
}

inline AblationReport ablation(const Dataset& ds, const FusedDataset& fused, TaskId task,
                               const CvOptions& opt) {
  std::vector<ModalityId> all;
  for (std::size_t k = 0; k < kFusionInputCount; ++k) all.push_back(modality_at(k));
  return ablation(ds, fused, task, opt, all);
}

// ---- contribution ratios ----

struct ContributionReport {
  std::vector<double> ratios;                 ///< one per fusion input, sums to 1
  std::vector<std::vector<double>> per_fold;  ///< same, per fold
  bool degenerate = false;                    ///< every docking output was zero
};

namespace detail {
inline std::vector<double> normalized(std::vector<double> v, bool* degenerate = nullptr) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
  else if (degenerate)
    *degenerate = true;
  return v;
}
}  // namespace detail

/// Ratio_k = mean over validation records and folds of p'_k * ||dock_k(x)||_1,
/// normalised across inputs.
inline ContributionReport contribution(std::span<const FusionModel> models,
                                       std::span<const std::vector<FusionInput>> validation) {
  if (models.empty() || models.size() != validation.size())
    throw InvalidArgument("contribution needs one validation set per model");
  ContributionReport rep;
  std::vector<double> total(models.front().inputs(), 0.0);
  std::size_t count = 0;
  for (std::size_t f = 0; f < models.size(); ++f) {
    std::vector<double> sum(total.size(), 0.0);
    for (const auto& in : validation[f]) {
      const auto c = docking_contribution(in, models[f]);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += c[k];
    }
    for (std::size_t k = 0; k < sum.size(); ++k) total[k] += sum[k];
    count += validation[f].size();
    rep.per_fold.push_back(detail::normalized(sum));
  }
  if (count == 0) throw InvalidArgument("contribution needs validation records");
  rep.ratios = detail::normalized(total, &rep.degenerate);
  return rep;
}

/// Same quantity from the per-fold sums collected during cross-validation.
inline ContributionReport contribution(const CvResult& cv) {
  ContributionReport rep;
  std::vector<double> total;
  for (const auto& f : cv.folds) {
    if (total.empty()) total.assign(f.contribution_sum.size(), 0.0);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += f.contribution_sum[k];
    rep.per_fold.push_back(detail::normalized(f.contribution_sum));
  }
  rep.ratios = detail::normalized(total, &rep.degenerate);
  return rep;
}

}  // namespace game
