#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "game/embrace.hpp"
#include "game/error.hpp"
#include "game/rng.hpp"

namespace game {

enum class OptimizerKind { sgd, adam };
enum class ClassWeighting { none, inverse_frequency };

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ClassWeighting class_weighting = ClassWeighting::none;
  /// L2 penalty coefficient added to every gradient.
  double weight_decay = 0.0;
  std::size_t embrace_size = 32;
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
      throw ConfigError("adam hyper-parameters out of range");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
    if (embrace_size < 1) throw ConfigError("embrace size must be >= 1");
  }
};

struct LossResult {
  double loss = 0.0;
  std::array<double, kClassCount> grad_logits{};
};

inline constexpr double kLogFloor = 1e-12;

/// Weighted cross-entropy on softmax probabilities; gradient is w.r.t. the logits.
inline LossResult cross_entropy(const std::array<double, kClassCount>& probs, int label,
                                double class_weight = 1.0) {
  if (label != 0 && label != 1) throw InvalidArgument("label must be 0 or 1");
  LossResult r;
  r.loss = -class_weight * std::log(std::max(probs[static_cast<std::size_t>(label)], kLogFloor));
  for (std::size_t o = 0; o < kClassCount; ++o)
    r.grad_logits[o] = class_weight * (probs[o] - (static_cast<int>(o) == label ? 1.0 : 0.0));
  return r;
}

/// n / (2 n_c) per class; 1 for an absent class.
inline std::array<double, kClassCount> class_weights(std::span<const int> labels,
                                                     ClassWeighting mode) {
  if (mode == ClassWeighting::none || labels.empty()) return {1.0, 1.0};
  std::array<double, kClassCount> count{};
  for (int l : labels) count[static_cast<std::size_t>(l)] += 1.0;
  std::array<double, kClassCount> w{};
  for (std::size_t c = 0; c < kClassCount; ++c)
    w[c] = count[c] > 0 ? static_cast<double>(labels.size()) / (kClassCount * count[c]) : 1.0;
  return w;
}

class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<double> params, std::span<const double> grad) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
  }

 private:
  double lr_;
};

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    b1t_ *= b1_;
    b2t_ *= b2_;
    const double c1 = 1.0 - b1t_, c2 = 1.0 - b2t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  double b1t_ = 1.0, b2t_ = 1.0;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Either optimizer behind one interface.
class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n)
      : kind_(cfg.optimizer), sgd_(cfg.learning_rate),
        adam_(cfg.optimizer == OptimizerKind::adam ? n : 0, cfg.learning_rate, cfg.beta1,
              cfg.beta2, cfg.epsilon) {}
  void step(std::span<double> params, std::span<const double> grad) {
    if (kind_ == OptimizerKind::adam)
      adam_.step(params, grad);
    else
      sgd_.step(params, grad);
  }

 private:
  OptimizerKind kind_;
  Sgd sgd_;
  Adam adam_;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  ///< mean loss per epoch
  std::uint64_t params_hash = 0;
  std::vector<std::string> warnings;
};

/// Per-record (batch size 1) training of `model` on `inputs` / `labels`.
/// Deterministic given cfg.seed.
inline TrainHistory train(FusionModel& model, std::span<const FusionInput> inputs,
                          std::span<const int> labels, const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw InvalidArgument("training split is empty");
  if (inputs.size() != labels.size()) throw InvalidArgument("inputs and labels differ in length");
  TrainHistory history;
  const auto weights = class_weights(labels, cfg.class_weighting);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size()))
    history.warnings.push_back("training split contains a single class");

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng mask_rng(derive_seed(cfg.seed, "mask"));
  Optimizer opt(cfg, model.param_count());
  std::vector<double> grad(model.param_count());
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  const ForwardMode mode = SampleMode{&mask_rng};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto cache = forward(inputs[idx], model, mode);
      const int y = labels[idx];
      const auto loss = cross_entropy(cache.probs, y, weights[static_cast<std::size_t>(y)]);
      if (!std::isfinite(loss.loss))
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch + 1));
      total += loss.loss;
      std::fill(grad.begin(), grad.end(), 0.0);
      backward(cache, model, loss.grad_logits, grad);
      if (cfg.weight_decay > 0.0) {
        const auto params = model.params();
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.weight_decay * params[i];
      }
      opt.step(model.params(), grad);
    }
    const double mean = total / static_cast<double>(inputs.size());
    for (double p : model.params())
      if (!std::isfinite(p))
        throw DivergenceError("non-finite parameter after epoch " + std::to_string(epoch + 1));
    history.epoch_loss.push_back(mean);
  }
  history.params_hash = fnv1a(model.params());
  return history;
}

inline int predict(const FusionInput& input, const FusionModel& model) {
  const auto cache = forward(input, model, InferMode{});
  return cache.probs[1] > cache.probs[0] ? 1 : 0;
}

// ---- baselines ----

/// Always predicts the more frequent training class (negative on ties).
struct MajorityBaseline {
  int label = 0;
  int predict() const noexcept { return label; }
};

inline MajorityBaseline majority_baseline(std::span<const int> labels) {
  if (labels.empty()) throw InvalidArgument("majority baseline needs labels");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  return {2 * pos > static_cast<long>(labels.size()) ? 1 : 0};
}

/// Two-logit softmax regression on one vector input.
struct LinearProbe {
  std::size_t dim = 0;
  std::vector<double> params;  ///< weight (2 x dim) then bias (2)

  std::array<double, kClassCount> probabilities(std::span<const double> x) const {
    if (x.size() != dim) throw InvalidArgument("probe input has wrong dimension");
    std::array<double, kClassCount> z{};
    for (std::size_t o = 0; o < kClassCount; ++o) {
      z[o] = params[kClassCount * dim + o];
      for (std::size_t j = 0; j < dim; ++j) z[o] += params[o * dim + j] * x[j];
    }
    return softmax2(z);
  }
  int predict(std::span<const double> x) const {
    const auto p = probabilities(x);
    return p[1] > p[0] ? 1 : 0;
  }
};

inline LinearProbe train_linear_probe(std::span<const std::vector<double>> x,
                                      std::span<const int> labels, const TrainConfig& cfg) {
  cfg.validate();
  if (x.empty() || x.size() != labels.size())
    throw InvalidArgument("probe needs matching, non-empty inputs and labels");
  LinearProbe probe{x.front().size(), {}};
  probe.params.assign(kClassCount * probe.dim + kClassCount, 0.0);
  const auto weights = class_weights(labels, cfg.class_weighting);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Optimizer opt(cfg, probe.params.size());
  std::vector<double> grad(probe.params.size());
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t idx : order) {
      const int y = labels[idx];
      const auto loss = cross_entropy(probe.probabilities(x[idx]), y,
                                      weights[static_cast<std::size_t>(y)]);
      for (std::size_t o = 0; o < kClassCount; ++o) {
        for (std::size_t j = 0; j < probe.dim; ++j)
          grad[o * probe.dim + j] = loss.grad_logits[o] * x[idx][j];
        grad[kClassCount * probe.dim + o] = loss.grad_logits[o];
      }
      if (cfg.weight_decay > 0.0)
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.weight_decay * probe.params[i];
      opt.step(probe.params, grad);
    }
  }
  return probe;
}

}  // namespace game
