#include <algorithm>
#include <iterator>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "game/analysis.hpp"

namespace game {
namespace {

CvOptions quick_options() {
  CvOptions opt;
  opt.k = 3;
  opt.seed = 23;
  opt.train.epochs = 2;
  opt.train.embrace_size = 8;
  return opt;
}

/// Generated records with hand-set labels: `set(labels, r)` edits record r.
template <class F>
Dataset relabelled(std::size_t n, std::uint64_t seed, F set) {
  GeneratorConfig cfg;
  cfg.n_records = n;
  auto recs = generate_synthetic(cfg, seed).records();
  for (std::size_t r = 0; r < recs.size(); ++r) set(recs[r].labels, r);
  return Dataset(std::move(recs), SyntheticSource{seed, 0});
}

TEST(Comorbidity, IdenticalAndDisjointLabels) {
  const auto ds = relabelled(40, 1, [](Labels& l, std::size_t r) {
    l.fill(0);
    l[index(TaskId::depression)] = r % 2;
    l[index(TaskId::anxiety)] = r % 2;
    l[index(TaskId::hostility)] = 1 - r % 2;
  });
  for (auto mode : {ComorbidityMode::conditional, ComorbidityMode::jaccard}) {
    const auto m = comorbidity(ds, mode);
    const auto d = index(TaskId::depression), a = index(TaskId::anxiety), h = index(TaskId::hostility);
    EXPECT_EQ(m.values[d][a], 1.0);
    EXPECT_EQ(m.values[a][d], 1.0);
    EXPECT_EQ(m.values[d][h], 0.0);
    EXPECT_EQ(m.values[h][d], 0.0);
  }
  // No positives for j: conditional is undefined, jaccard is still 0 for a non-empty i.
  const auto s = index(TaskId::suicidal_tendency), d = index(TaskId::depression);
  EXPECT_FALSE(comorbidity(ds).values[d][s]);
  EXPECT_EQ(comorbidity(ds, ComorbidityMode::jaccard).values[d][s], 0.0);
  EXPECT_FALSE(comorbidity(ds, ComorbidityMode::jaccard).values[s][s]);
}

TEST(Comorbidity, MatchesSetCounts) {
  std::mt19937_64 rng(2);
  const auto ds = relabelled(300, 3, [&](Labels& l, std::size_t) {
    for (std::size_t t = 0; t < kTaskCount; ++t) l[t] = rng() % 3 == 0;
    // Planned overlap: hostility copies depression half of the time.
    if (rng() % 2) l[index(TaskId::hostility)] = l[index(TaskId::depression)];
  });
  const auto cond = comorbidity(ds, ComorbidityMode::conditional);
  const auto jac = comorbidity(ds, ComorbidityMode::jaccard);
  for (std::size_t i = 0; i < kDisorderCount; ++i) {
    EXPECT_EQ(cond.values[i][i], 1.0);
    for (std::size_t j = 0; j < kDisorderCount; ++j) {
      std::set<std::size_t> si, sj, both, either;
      for (std::size_t r = 0; r < ds.size(); ++r) {
        if (ds[r].labels[i]) si.insert(r);
        if (ds[r].labels[j]) sj.insert(r);
      }
      std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(), std::inserter(both, both.end()));
      std::set_union(si.begin(), si.end(), sj.begin(), sj.end(), std::inserter(either, either.end()));
      EXPECT_DOUBLE_EQ(*jac.values[i][j], static_cast<double>(both.size()) / static_cast<double>(either.size()));
      EXPECT_DOUBLE_EQ(*cond.values[i][j], static_cast<double>(both.size()) / static_cast<double>(sj.size()));
      EXPECT_EQ(*jac.values[i][j], *jac.values[j][i]);
    }
  }
}

TEST(CrossPrediction, DiagonalIdentityAndComplement) {
  const auto ds = relabelled(60, 4, [](Labels& l, std::size_t) {
    l[index(TaskId::anxiety)] = l[index(TaskId::overall)];
    l[index(TaskId::hostility)] = 1 - l[index(TaskId::overall)];
  });
  const auto opt = quick_options();
  const auto m = cross_prediction(ds, opt);
  for (std::size_t t = 0; t < kTaskCount; ++t)
    EXPECT_EQ(m[t][t], cross_validate(ds, task_at(t), opt).report.accuracy().mean) << kTaskNames[t];
  const auto o = index(TaskId::overall), a = index(TaskId::anxiety), h = index(TaskId::hostility);
  for (std::size_t i = 0; i < kTaskCount; ++i) EXPECT_EQ(m[i][a], m[i][o]);
  EXPECT_NEAR(m[o][h], 1.0 - m[o][o], 1e-12);
}

TEST(CrossPrediction, RunsMustBeInTaskOrder) {
  GeneratorConfig cfg;
  cfg.n_records = 30;
  const auto ds = generate_synthetic(cfg, 5);
  std::vector<CvResult> runs(kTaskCount);
  EXPECT_THROW(cross_prediction(ds, std::span<const CvResult>(runs)), InvalidArgument);
  runs.pop_back();
  EXPECT_THROW(cross_prediction(ds, std::span<const CvResult>(runs)), InvalidArgument);
}

TEST(Ablation, PairedWithStandaloneRunAndDeterministic) {
  GeneratorConfig cfg;
  cfg.n_records = 60;
  const auto ds = generate_synthetic(cfg, 6);
  const auto fused = fuse_dataset(ds);
  const auto opt = quick_options();
  const std::vector<ModalityId> removed = {ModalityId::mfcc, ModalityId::attention};
  const auto a = ablation(ds, fused, TaskId::overall, opt, removed);
  const auto b = ablation(ds, fused, TaskId::overall, opt, removed);
  EXPECT_EQ(a.full.accuracy().mean, cross_validate(ds, fused, TaskId::overall, opt).report.accuracy().mean);
  ASSERT_EQ(a.arms.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.arms[i].delta_accuracy, b.arms[i].delta_accuracy);
    EXPECT_EQ(a.arms[i].delta_f1, b.arms[i].delta_f1);
    EXPECT_DOUBLE_EQ(a.arms[i].delta_accuracy, a.arms[i].report.accuracy().mean - a.full.accuracy().mean);
  }
  auto arm = opt;
  arm.pipeline.excluded[index(ModalityId::mfcc)] = true;
  EXPECT_EQ(a.arms[0].report.accuracy().mean, cross_validate(ds, fused, TaskId::overall, arm).report.accuracy().mean);
}

TEST(Ablation, NeedsTwoModalities) {
  GeneratorConfig cfg;
  cfg.n_records = 30;
  const auto ds = generate_synthetic(cfg, 7);
  auto opt = quick_options();
  for (std::size_t m = 1; m < kSingleModalCount; ++m) opt.pipeline.excluded[m] = true;
  EXPECT_THROW(ablation(ds, fuse_dataset(ds), TaskId::overall, opt), InvalidArgument);
}

TEST(Contribution, SimplexFromCrossValidation) {
  GeneratorConfig cfg;
  cfg.n_records = 60;
  const auto ds = generate_synthetic(cfg, 8);
  const auto cv = cross_validate(ds, TaskId::overall, quick_options());
  const auto rep = contribution(cv);
  ASSERT_EQ(rep.ratios.size(), kFusionInputCount);
  double s = 0;
  for (double r : rep.ratios) {
    EXPECT_GE(r, 0.0);
    s += r;
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
  EXPECT_EQ(rep.per_fold.size(), 3u);
  EXPECT_FALSE(rep.degenerate);
}

TEST(Contribution, FromModelsZeroWeightsAndSymmetry) {
  FusionConfig fc;
  fc.input_dims = {2, 2, 3};
  fc.embrace_size = 4;
  FusionModel m(fc);
  m.initialize(3);
  std::copy(m.dock_weight(0).begin(), m.dock_weight(0).end(), m.dock_weight(1).begin());
  for (double& w : m.dock_weight(2)) w = 0.0;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  std::vector<FusionInput> val;
  for (int i = 0; i < 20; ++i) {
    FusionInput in;
    std::vector<double> x = {n01(rng), n01(rng)};
    in.x = {x, x, {n01(rng), n01(rng), n01(rng)}};
    in.available = {true, true, true};
    val.push_back(in);
  }
  const std::vector<FusionModel> models = {m};
  const std::vector<std::vector<FusionInput>> sets = {val};
  const auto rep = contribution(models, sets);
  EXPECT_EQ(rep.ratios[2], 0.0);
  EXPECT_EQ(rep.ratios[0], rep.ratios[1]);
  EXPECT_NEAR(rep.ratios[0] + rep.ratios[1], 1.0, 1e-12);
}

}  // namespace
}  // namespace game
