#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "game/embrace.hpp"
#include "support.hpp"

namespace game {
namespace {

FusionModel tiny_model(std::vector<std::size_t> dims, std::size_t c, std::uint64_t seed) {
  FusionConfig cfg;
  cfg.input_dims = std::move(dims);
  cfg.embrace_size = c;
  FusionModel m(cfg);
  m.initialize(seed);
  return m;
}

FusionInput random_input(std::mt19937_64& rng, const FusionModel& m) {
  FusionInput in;
  for (std::size_t k = 0; k < m.inputs(); ++k) {
    in.x.push_back(test::random_vector(rng, m.input_dim(k), -2, 2));
    in.available.push_back(true);
  }
  return in;
}

TEST(Dock, HandCases) {
  FusionConfig cfg;
  cfg.input_dims = {1};
  cfg.embrace_size = 1;
  FusionModel m(cfg);
  EXPECT_EQ(dock(std::vector<double>{3.0}, 0, m), std::vector<double>{0.0});
  m.dock_weight(0)[0] = 1.0;
  EXPECT_EQ(dock(std::vector<double>{-3.0}, 0, m), std::vector<double>{0.0});
  m.dock_weight(0)[0] = 2.0;
  m.dock_bias(0)[0] = 1.0;
  EXPECT_EQ(dock(std::vector<double>{3.0}, 0, m), std::vector<double>{7.0});
  EXPECT_THROW(dock(std::vector<double>{3.0, 1.0}, 0, m), InvalidArgument);
}

TEST(Renormalize, Cases) {
  const std::vector<double> uniform(10, 0.1);
  std::vector<bool> avail(10, true);
  avail[4] = false;
  const auto p = renormalize_p(uniform, avail);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(p[k], k == 4 ? 0.0 : 1.0 / 9.0, 1e-15);

  std::vector<double> one_hot(10, 0.0);
  one_hot[2] = 1.0;
  EXPECT_EQ(renormalize_p(one_hot, avail), one_hot);

  one_hot.assign(10, 0.0);
  one_hot[4] = 1.0;
  const auto fallback = renormalize_p(one_hot, avail);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(fallback[k], k == 4 ? 0.0 : 1.0 / 9.0, 1e-15);
  EXPECT_THROW(renormalize_p(one_hot, avail, EmptyMassPolicy::error), InvalidArgument);
  EXPECT_THROW(renormalize_p(uniform, std::vector<bool>(10, false)), InvalidArgument);
}

TEST(SampleMask, OneHotAndDeterminism) {
  std::vector<double> p(5, 0.0);
  p[3] = 1.0;
  Rng rng(1);
  const auto mask = sample_mask(p, 32, rng);
  for (auto s : mask.selection) EXPECT_EQ(s, 3u);
  const std::vector<double> u(10, 0.1);
  Rng a(99), b(99);
  EXPECT_EQ(sample_mask(u, 32, a), sample_mask(u, 32, b));
  EXPECT_THROW(sample_mask(std::vector<double>{0.5, 0.6}, 4, a), InvalidArgument);
}

TEST(SampleMask, UniformFrequencies) {
  const std::vector<double> p(10, 0.1);
  Rng rng(2);
  std::vector<double> count(10, 0.0);
  const std::size_t masks = 100000, c = 32;
  for (std::size_t i = 0; i < masks; ++i)
    for (auto s : sample_mask(p, c, rng).selection) count[s] += 1.0;
  for (double v : count) EXPECT_NEAR(v / (masks * c), 0.1, 0.01);
}

TEST(SampleMask, SkipsZeroProbability) {
  const std::vector<double> p = {0.5, 0.0, 0.5};
  Rng rng(3);
  for (int i = 0; i < 1000; ++i)
    for (auto s : sample_mask(p, 8, rng).selection) ASSERT_NE(s, 1u);
}

TEST(Embrace, SelectionCases) {
  const std::vector<std::vector<double>> docked = {std::vector<double>(4, 1.0), std::vector<double>(4, 3.0)};
  EXPECT_EQ(embrace(docked, EmbraceMask{{1, 1, 1, 1}}), docked[1]);
  EXPECT_EQ(embrace(docked, EmbraceMask{{0, 1, 0, 1}}), (std::vector<double>{1, 3, 1, 3}));
  EXPECT_EQ(embrace_expected(docked, std::vector<double>{0.5, 0.5}), std::vector<double>(4, 2.0));
  EXPECT_EQ(embrace_expected(docked, std::vector<double>{0.0, 1.0}), embrace(docked, EmbraceMask{{1, 1, 1, 1}}));
}

TEST(Embrace, SampledMeanApproachesExpectation) {
  std::mt19937_64 gen(4);
  std::vector<std::vector<double>> docked;
  for (int k = 0; k < 3; ++k) docked.push_back(test::random_vector(gen, 6, 0, 2));
  const std::vector<double> p = {0.2, 0.3, 0.5};
  Rng rng(5);
  std::vector<double> mean(6, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto e = embrace(docked, sample_mask(p, 6, rng));
    for (std::size_t j = 0; j < 6; ++j) {
      bool from_some = false;
      for (const auto& d : docked) from_some = from_some || d[j] == e[j];
      ASSERT_TRUE(from_some);
      mean[j] += e[j] / n;
    }
  }
  const auto expect = embrace_expected(docked, p);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(mean[j], expect[j], 1e-2);
}

TEST(Forward, ProbabilitiesAndDeterminism) {
  std::mt19937_64 gen(6);
  auto model = tiny_model({3, 5, 2}, 8, 7);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto in = random_input(gen, model);
    const auto a = forward(in, model, InferMode{});
    const auto b = forward(in, model, InferMode{});
    EXPECT_NEAR(a.probs[0] + a.probs[1], 1.0, 1e-12);
    EXPECT_EQ(a.probs, b.probs);
    const auto s = forward(in, model, SampleMode{&rng});
    EXPECT_NEAR(s.probs[0] + s.probs[1], 1.0, 1e-12);
  }
  for (double& w : model.head_weight()) w = 0.0;
  const auto z = forward(random_input(gen, model), model, InferMode{});
  EXPECT_EQ(z.probs[0], 0.5);
  EXPECT_EQ(z.probs[1], 0.5);
}

TEST(Forward, MaskedDockingMatchesFullDocking) {
  std::mt19937_64 gen(9);
  const auto model = tiny_model({4, 2, 3}, 6, 10);
  const auto in = random_input(gen, model);
  const EmbraceMask mask{{0, 1, 2, 2, 1, 0}};
  const auto cache = forward(in, model, FixedMaskMode{mask});
  std::vector<std::vector<double>> full;
  for (std::size_t k = 0; k < 3; ++k) full.push_back(dock(in.x[k], k, model));
  EXPECT_EQ(cache.embraced, embrace(full, mask));
}

TEST(Forward, RejectsMaskOnUnavailableInput) {
  std::mt19937_64 gen(11);
  const auto model = tiny_model({2, 2}, 2, 12);
  auto in = random_input(gen, model);
  in.available[1] = false;
  in.x[1].clear();
  EXPECT_THROW(forward(in, model, FixedMaskMode{EmbraceMask{{0, 1}}}), InvalidArgument);
  Rng rng(1);
  const auto s = forward(in, model, SampleMode{&rng});
  for (auto k : s.mask->selection) EXPECT_EQ(k, 0u);
}

double loss_at(const FusionInput& in, const FusionModel& m, const EmbraceMask& mask,
               const std::array<double, 2>& coeff) {
  const auto c = forward(in, m, FixedMaskMode{mask});
  return coeff[0] * c.logits[0] + coeff[1] * c.logits[1];
}

TEST(Backward, FiniteDifferences) {
  std::mt19937_64 gen(13);
  std::uniform_int_distribution<std::size_t> dim(1, 5), pick(0, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto model = tiny_model({dim(gen), dim(gen), dim(gen)}, 4, 100 + trial);
    for (double& b : model.params()) b += 0.05 * (static_cast<double>(gen() % 1000) / 1000.0 - 0.5);
    const auto in = random_input(gen, model);
    EmbraceMask mask;
    for (int i = 0; i < 4; ++i) mask.selection.push_back(pick(gen));
    const std::array<double, 2> coeff = {0.7, -1.3};
    const auto grad = backward(forward(in, model, FixedMaskMode{mask}), model, coeff);
    const double h = 1e-5;
    for (std::size_t i = 0; i < model.param_count(); ++i) {
      const double orig = model.params()[i];
      model.params()[i] = orig + h;
      const double up = loss_at(in, model, mask, coeff);
      model.params()[i] = orig - h;
      const double down = loss_at(in, model, mask, coeff);
      model.params()[i] = orig;
      // Skip coordinates whose perturbation crosses a ReLU kink.
      bool near_kink = false;
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t u = 0; u < 4; ++u) {
          double z = model.dock_bias(k)[u];
          for (std::size_t j = 0; j < in.x[k].size(); ++j) z += model.dock_weight(k)[u * in.x[k].size() + j] * in.x[k][j];
          near_kink = near_kink || std::abs(z) < 1e-4;
        }
      if (near_kink) continue;
      const double fd = (up - down) / (2 * h);
      const double rel = std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd) + std::abs(grad[i]));
      worst = std::max(worst, rel);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, UnavailableAndZeroUpstream) {
  std::mt19937_64 gen(14);
  const auto model = tiny_model({3, 3, 3}, 5, 15);
  auto in = random_input(gen, model);
  in.available[1] = false;
  in.x[1].clear();
  Rng rng(16);
  const auto cache = forward(in, model, SampleMode{&rng});
  const auto g = backward(cache, model, {0.3, -0.3});
  for (std::size_t i = model.weight_offset(1); i < model.bias_offset(1) + 5; ++i) EXPECT_EQ(g[i], 0.0);
  const auto zero = backward(cache, model, {0.0, 0.0});
  for (double v : zero) EXPECT_EQ(v, 0.0);
  const auto infer = backward(forward(in, model, InferMode{}), model, {0.3, -0.3});
  for (std::size_t i = model.weight_offset(1); i < model.bias_offset(1) + 5; ++i) EXPECT_EQ(infer[i], 0.0);
}

TEST(Init, GlorotBoundsAndPerInputStreams) {
  const auto a = tiny_model({10, 4, 6}, 32, 1);
  const double lim = std::sqrt(6.0 / (10.0 + 32.0));
  for (double w : a.dock_weight(0)) EXPECT_LE(std::abs(w), lim);
  for (double b : a.dock_bias(0)) EXPECT_EQ(b, 0.0);
  for (double b : a.head_bias()) EXPECT_EQ(b, 0.0);
  // Changing one input's width leaves the other inputs' draws unchanged.
  const auto b = tiny_model({10, 9, 6}, 32, 1);
  EXPECT_TRUE(std::equal(a.dock_weight(0).begin(), a.dock_weight(0).end(), b.dock_weight(0).begin()));
  EXPECT_TRUE(std::equal(a.dock_weight(2).begin(), a.dock_weight(2).end(), b.dock_weight(2).begin()));
}

TEST(Checkpoint, JsonRoundTrip) {
  const auto m = tiny_model({3, 1, 2}, 4, 17);
  const auto back = fusion_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_TRUE(back == m);
  auto j = to_json(m);
  j["format"] = "something-else";
  EXPECT_THROW(fusion_model_from_json(j), DataError);
}

TEST(Contribution, ZeroWeightsAndSymmetry) {
  auto m = tiny_model({3, 3}, 4, 18);
  std::copy(m.dock_weight(0).begin(), m.dock_weight(0).end(), m.dock_weight(1).begin());
  std::mt19937_64 gen(19);
  auto in = random_input(gen, m);
  in.x[1] = in.x[0];
  const auto c = docking_contribution(in, m);
  EXPECT_EQ(c[0], c[1]);
  for (double& w : m.dock_weight(1)) w = 0.0;
  EXPECT_EQ(docking_contribution(in, m)[1], 0.0);
}

}  // namespace
}  // namespace game
