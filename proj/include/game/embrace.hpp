#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "game/error.hpp"
#include "game/rng.hpp"

namespace game {

inline constexpr std::size_t kClassCount = 2;

/// What to do when the availability mask leaves no probability mass.
enum class EmptyMassPolicy { uniform_over_available, error };

/// Zeroes unavailable entries of `p` and rescales the rest to sum to 1.
inline std::vector<double> renormalize_p(std::span<const double> p,
                                         const std::vector<bool>& available,
                                         EmptyMassPolicy policy = EmptyMassPolicy::uniform_over_available) {
  if (p.size() != available.size()) throw InvalidArgument("availability size does not match p");
  std::vector<double> out(p.size(), 0.0);
  double mass = 0.0;
  std::size_t n_avail = 0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (available[k]) {
      out[k] = p[k];
      mass += p[k];
      ++n_avail;
    }
  if (n_avail == 0) throw InvalidArgument("no modality is available");
  if (mass <= 0.0) {
    if (policy == EmptyMassPolicy::error)
      throw InvalidArgument("modality probabilities put no mass on available modalities");
    for (std::size_t k = 0; k < p.size(); ++k)
      out[k] = available[k] ? 1.0 / static_cast<double>(n_avail) : 0.0;
    return out;
  }
  for (double& v : out) v /= mass;
  return out;
}

inline void check_simplex(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("modality probabilities are empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("modality probabilities must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("modality probabilities must sum to 1");
}

/// Selected modality (0-based) for every embracement coordinate.
struct EmbraceMask {
  std::vector<std::size_t> selection;
  bool operator==(const EmbraceMask&) const = default;
};

/// c independent categorical draws from p.
inline EmbraceMask sample_mask(std::span<const double> p, std::size_t c, Rng& rng) {
  check_simplex(p);
  std::size_t last = 0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) last = k;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EmbraceMask mask;
  mask.selection.resize(c);
  for (auto& s : mask.selection) {
    const double u = unit(rng);
    double cum = 0.0;
    s = last;
    for (std::size_t k = 0; k < p.size(); ++k) {
      cum += p[k];
      if (p[k] > 0.0 && u < cum) {
        s = k;
        break;
      }
    }
  }
  return mask;
}

/// e_i = docked[mask_i][i].
inline std::vector<double> embrace(std::span<const std::vector<double>> docked,
                                   const EmbraceMask& mask) {
  std::vector<double> e(mask.selection.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& d = docked[mask.selection[i]];
    if (d.size() != e.size()) throw InvalidArgument("docked vector length differs from mask");
    e[i] = d[i];
  }
  return e;
}

/// e_i = sum_k p_k docked[k][i]; zero-probability entries may be empty.
inline std::vector<double> embrace_expected(std::span<const std::vector<double>> docked,
                                            std::span<const double> p) {
  std::size_t c = 0;
  for (std::size_t k = 0; k < docked.size(); ++k)
    if (p[k] > 0.0) c = docked[k].size();
  std::vector<double> e(c, 0.0);
  for (std::size_t k = 0; k < docked.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (docked[k].size() != c) throw InvalidArgument("docked vectors differ in length");
    for (std::size_t i = 0; i < c; ++i) e[i] += p[k] * docked[k][i];
  }
  return e;
}

struct FusionConfig {
  std::vector<std::string> names;       ///< one per fusion input
  std::vector<std::size_t> input_dims;  ///< D_k
  std::size_t embrace_size = 32;        ///< c
  std::vector<double> p;                ///< modality probabilities; empty = uniform
  EmptyMassPolicy empty_mass = EmptyMassPolicy::uniform_over_available;

  std::size_t inputs() const noexcept { return input_dims.size(); }
};

/// Docking layers ReLU(W_k x + b_k) into R^c, the embracement layer and an
/// affine c -> 2 head. Parameters live in one flat buffer: for each input k,
/// W_k (c x D_k, row-major) then b_k (c); then the head weight (2 x c) and bias (2).
class FusionModel {
 public:
  FusionModel() = default;
  explicit FusionModel(FusionConfig cfg) : cfg_(std::move(cfg)) {
    const std::size_t m = cfg_.inputs();
    if (m == 0) throw InvalidArgument("fusion model needs at least one input");
    if (cfg_.embrace_size == 0) throw InvalidArgument("embracement size must be > 0");
    if (cfg_.names.empty())
      for (std::size_t k = 0; k < m; ++k) cfg_.names.push_back("input" + std::to_string(k));
    if (cfg_.names.size() != m) throw InvalidArgument("one name per fusion input required");
    if (cfg_.p.empty()) cfg_.p.assign(m, 1.0 / static_cast<double>(m));
    if (cfg_.p.size() != m) throw InvalidArgument("one probability per fusion input required");
    check_simplex(cfg_.p);
    const std::size_t c = cfg_.embrace_size;
    std::size_t off = 0;
    for (std::size_t k = 0; k < m; ++k) {
      weight_off_.push_back(off);
      off += c * cfg_.input_dims[k];
      bias_off_.push_back(off);
      off += c;
    }
    head_weight_off_ = off;
    off += kClassCount * c;
    head_bias_off_ = off;
    off += kClassCount;
    params_.assign(off, 0.0);
  }

  const FusionConfig& config() const noexcept { return cfg_; }
  std::size_t inputs() const noexcept { return cfg_.inputs(); }
  std::size_t embrace_size() const noexcept { return cfg_.embrace_size; }
  std::size_t input_dim(std::size_t k) const { return cfg_.input_dims.at(k); }
  std::span<const double> p() const noexcept { return cfg_.p; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::span<double> dock_weight(std::size_t k) { return section(weight_off_.at(k), cfg_.embrace_size * cfg_.input_dims[k]); }
  std::span<const double> dock_weight(std::size_t k) const { return section(weight_off_.at(k), cfg_.embrace_size * cfg_.input_dims[k]); }
  std::span<double> dock_bias(std::size_t k) { return section(bias_off_.at(k), cfg_.embrace_size); }
  std::span<const double> dock_bias(std::size_t k) const { return section(bias_off_.at(k), cfg_.embrace_size); }
  std::span<double> head_weight() { return section(head_weight_off_, kClassCount * cfg_.embrace_size); }
  std::span<const double> head_weight() const { return section(head_weight_off_, kClassCount * cfg_.embrace_size); }
  std::span<double> head_bias() { return section(head_bias_off_, kClassCount); }
  std::span<const double> head_bias() const { return section(head_bias_off_, kClassCount); }

  /// Offsets into the flat buffer, shared with gradient buffers.
  std::size_t weight_offset(std::size_t k) const { return weight_off_.at(k); }
  std::size_t bias_offset(std::size_t k) const { return bias_off_.at(k); }
  std::size_t head_weight_offset() const noexcept { return head_weight_off_; }
  std::size_t head_bias_offset() const noexcept { return head_bias_off_; }

  /// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases. Each docking
  /// layer draws from its own stream so that dropping one input leaves the others unchanged.
  void initialize(std::uint64_t seed) {
    std::fill(params_.begin(), params_.end(), 0.0);
    const double c = static_cast<double>(cfg_.embrace_size);
    for (std::size_t k = 0; k < inputs(); ++k) {
      Rng rng(derive_seed(derive_seed(seed, "dock"), k));
      const double lim = std::sqrt(6.0 / (static_cast<double>(cfg_.input_dims[k]) + c));
      std::uniform_real_distribution<double> u(-lim, lim);
      for (double& w : dock_weight(k)) w = u(rng);
    }
    Rng rng(derive_seed(seed, "head"));
    const double lim = std::sqrt(6.0 / (c + static_cast<double>(kClassCount)));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (double& w : head_weight()) w = u(rng);
  }

  bool operator==(const FusionModel& o) const {
    return cfg_.input_dims == o.cfg_.input_dims && cfg_.embrace_size == o.cfg_.embrace_size &&
           cfg_.p == o.cfg_.p && cfg_.names == o.cfg_.names && params_ == o.params_;
  }

 private:
  std::span<double> section(std::size_t off, std::size_t n) { return {params_.data() + off, n}; }
  std::span<const double> section(std::size_t off, std::size_t n) const {
    return {params_.data() + off, n};
  }

  FusionConfig cfg_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_off_, bias_off_;
  std::size_t head_weight_off_ = 0, head_bias_off_ = 0;
};

/// One record as seen by the fusion model.
struct FusionInput {
  std::vector<std::vector<double>> x;  ///< one vector per input; empty when unavailable
  std::vector<bool> available;
};

/// ReLU(W_k x + b_k).
inline std::vector<double> dock(std::span<const double> x, std::size_t k, const FusionModel& model) {
  if (x.size() != model.input_dim(k))
    throw InvalidArgument("input for modality '" + model.config().names.at(k) + "' has " +
                          std::to_string(x.size()) + " dims, expected " +
                          std::to_string(model.input_dim(k)));
  const std::size_t c = model.embrace_size(), d = x.size();
  const auto w = model.dock_weight(k);
  const auto b = model.dock_bias(k);
  std::vector<double> out(c);
  for (std::size_t i = 0; i < c; ++i) {
    double z = b[i];
    const double* row = w.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
    out[i] = z > 0.0 ? z : 0.0;
  }
  return out;
}

struct InferMode {};
struct SampleMode {
  Rng* rng;
};
struct FixedMaskMode {
  EmbraceMask mask;
};
using ForwardMode = std::variant<InferMode, SampleMode, FixedMaskMode>;

struct ForwardCache {
  const FusionInput* input = nullptr;
  std::vector<double> p;                 ///< renormalised probabilities
  /// Post-ReLU docking outputs, empty for unavailable inputs. With a mask only
  /// the selected units are computed; the others hold 0.
  std::vector<std::vector<double>> docked;
  std::optional<EmbraceMask> mask;       ///< absent in inference mode
  std::vector<double> embraced;
  std::array<double, kClassCount> logits{};
  std::array<double, kClassCount> probs{};
};

inline std::array<double, kClassCount> softmax2(const std::array<double, kClassCount>& z) {
  const double top = std::max(z[0], z[1]);
  const double a = std::exp(z[0] - top), b = std::exp(z[1] - top);
  return {a / (a + b), b / (a + b)};
}

/// Class probabilities for one record. The cache keeps a pointer to `input`,
/// which must outlive it.
inline ForwardCache forward(const FusionInput& input, const FusionModel& model,
                            const ForwardMode& mode) {
  const std::size_t m = model.inputs(), c = model.embrace_size();
  if (input.x.size() != m || input.available.size() != m)
    throw InvalidArgument("record has " + std::to_string(input.x.size()) + " inputs, model expects " +
                          std::to_string(m));
  ForwardCache cache;
  cache.input = &input;
  cache.p = renormalize_p(model.p(), input.available, model.config().empty_mass);
  cache.docked.resize(m);

  if (std::holds_alternative<InferMode>(mode)) {
    for (std::size_t k = 0; k < m; ++k)
      if (input.available[k]) cache.docked[k] = dock(input.x[k], k, model);
    cache.embraced = embrace_expected(cache.docked, cache.p);
  } else {
    if (const auto* s = std::get_if<SampleMode>(&mode)) {
      cache.mask = sample_mask(cache.p, c, *s->rng);
    } else {
      cache.mask = std::get<FixedMaskMode>(mode).mask;
      if (cache.mask->selection.size() != c) throw InvalidArgument("mask length differs from c");
      for (auto k : cache.mask->selection)
        if (k >= m || !input.available[k])
          throw InvalidArgument("mask selects an unavailable modality");
    }
    // Only the selected docking units reach the embracement layer.
    for (std::size_t k = 0; k < m; ++k)
      if (input.available[k]) {
        if (input.x[k].size() != model.input_dim(k))
          throw InvalidArgument("input for modality '" + model.config().names[k] +
                                "' has wrong dimension");
        cache.docked[k].assign(c, 0.0);
      }
    for (std::size_t i = 0; i < c; ++i) {
      const std::size_t k = cache.mask->selection[i];
      const auto& x = input.x[k];
      const double* row = model.dock_weight(k).data() + i * x.size();
      double z = model.dock_bias(k)[i];
      for (std::size_t j = 0; j < x.size(); ++j) z += row[j] * x[j];
      cache.docked[k][i] = z > 0.0 ? z : 0.0;
    }
    cache.embraced = embrace(cache.docked, *cache.mask);
  }

  const auto hw = model.head_weight();
  const auto hb = model.head_bias();
  for (std::size_t o = 0; o < kClassCount; ++o) {
    double z = hb[o];
    for (std::size_t i = 0; i < c; ++i) z += hw[o * c + i] * cache.embraced[i];
    cache.logits[o] = z;
  }
  cache.probs = softmax2(cache.logits);
  return cache;
}

/// Adds d(loss)/d(params) to `grad` (same layout as model.params()) given
/// d(loss)/d(logits). The sampled mask is treated as a constant; ReLU'(0) = 0.
inline void backward(const ForwardCache& cache, const FusionModel& model,
                     const std::array<double, kClassCount>& grad_logits, std::span<double> grad) {
  if (grad.size() != model.param_count()) throw InvalidArgument("gradient buffer has wrong size");
  const std::size_t m = model.inputs(), c = model.embrace_size();
  const auto hw = model.head_weight();
  std::vector<double> grad_e(c, 0.0);
  for (std::size_t o = 0; o < kClassCount; ++o) {
    const double g = grad_logits[o];
    grad[model.head_bias_offset() + o] += g;
    if (g == 0.0) continue;
    double* gw = grad.data() + model.head_weight_offset() + o * c;
    for (std::size_t i = 0; i < c; ++i) {
      gw[i] += g * cache.embraced[i];
      grad_e[i] += g * hw[o * c + i];
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!cache.input->available[k]) continue;
    const auto& x = cache.input->x[k];
    const auto& d = cache.docked[k];
    const std::size_t dim = x.size();
    double* gw = grad.data() + model.weight_offset(k);
    double* gb = grad.data() + model.bias_offset(k);
    for (std::size_t i = 0; i < c; ++i) {
      double gd = 0.0;
      if (cache.mask) {
        if (cache.mask->selection[i] == k) gd = grad_e[i];
      } else {
        gd = cache.p[k] * grad_e[i];
      }
      if (gd == 0.0 || d[i] <= 0.0) continue;
      gb[i] += gd;
      double* row = gw + i * dim;
      for (std::size_t j = 0; j < dim; ++j) row[j] += gd * x[j];
    }
  }
}

inline std::vector<double> backward(const ForwardCache& cache, const FusionModel& model,
                                    const std::array<double, kClassCount>& grad_logits) {
  std::vector<double> grad(model.param_count(), 0.0);
  backward(cache, model, grad_logits, grad);
  return grad;
}

/// p'_k * ||dock_k(x)||_1 for every input (0 for unavailable ones).
inline std::vector<double> docking_contribution(const FusionInput& input, const FusionModel& model) {
  const auto p = renormalize_p(model.p(), input.available, model.config().empty_mass);
  std::vector<double> out(model.inputs(), 0.0);
  for (std::size_t k = 0; k < model.inputs(); ++k) {
    if (!input.available[k] || p[k] == 0.0) continue;
    double l1 = 0.0;
    for (double v : dock(input.x[k], k, model)) l1 += std::abs(v);
    out[k] = p[k] * l1;
  }
  return out;
}

// ---- checkpoints ----

inline nlohmann::json to_json(const FusionModel& model) {
  using nlohmann::json;
  const std::size_t c = model.embrace_size();
  auto array = [](std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); };
  json docking = json::array();
  for (std::size_t k = 0; k < model.inputs(); ++k)
    docking.push_back({{"name", model.config().names[k]},
                       {"weight", {{"shape", {c, model.input_dim(k)}}, {"data", array(model.dock_weight(k))}}},
                       {"bias", {{"shape", {c}}, {"data", array(model.dock_bias(k))}}}});
  return {{"format", "game-fusion-checkpoint"},
          {"version", 1},
          {"config",
           {{"embrace_size", c},
            {"p", model.config().p},
            {"input_dims", model.config().input_dims},
            {"names", model.config().names},
            {"activation", "relu"}}},
          {"docking", docking},
          {"head",
           {{"weight", {{"shape", {kClassCount, c}}, {"data", array(model.head_weight())}}},
            {"bias", {{"shape", {kClassCount}}, {"data", array(model.head_bias())}}}}}};
}

inline FusionModel fusion_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "game-fusion-checkpoint" || j.at("version") != 1)
      throw DataError("not a fusion checkpoint (format/version)");
    const auto& cfgj = j.at("config");
    FusionConfig cfg;
    cfg.embrace_size = cfgj.at("embrace_size").get<std::size_t>();
    cfg.p = cfgj.at("p").get<std::vector<double>>();
    cfg.input_dims = cfgj.at("input_dims").get<std::vector<std::size_t>>();
    cfg.names = cfgj.at("names").get<std::vector<std::string>>();
    FusionModel model(cfg);
    auto fill = [](std::span<double> dst, const nlohmann::json& t, std::vector<std::size_t> shape) {
      if (t.at("shape").get<std::vector<std::size_t>>() != shape)
        throw DataError("checkpoint tensor has unexpected shape");
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != dst.size()) throw DataError("checkpoint tensor has wrong element count");
      std::copy(data.begin(), data.end(), dst.begin());
    };
    const auto& docking = j.at("docking");
    if (docking.size() != model.inputs()) throw DataError("checkpoint docking count mismatch");
    const std::size_t c = cfg.embrace_size;
    for (std::size_t k = 0; k < model.inputs(); ++k) {
      fill(model.dock_weight(k), docking[k].at("weight"), {c, cfg.input_dims[k]});
      fill(model.dock_bias(k), docking[k].at("bias"), {c});
    }
    fill(model.head_weight(), j.at("head").at("weight"), {kClassCount, c});
    fill(model.head_bias(), j.at("head").at("bias"), {kClassCount});
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid checkpoint: ") + e.what());
  }
}

}  // namespace game
