#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "game/error.hpp"
#include "game/matrix.hpp"
#include "game/modality.hpp"
#include "game/rng.hpp"

namespace game {

/// One modality of one subject: T time steps by D feature columns.
struct FeatureSequence {
  ModalityId modality = ModalityId::expression;
  Matrix values;

  std::size_t steps() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }

  void validate() const {
    if (values.rows() < 1 || values.cols() < 1)
      throw DataError("feature sequence for " + std::string(name(modality)) + " is empty");
    for (double v : values.data())
      if (!std::isfinite(v))
        throw DataError("feature sequence for " + std::string(name(modality)) +
                        " contains a non-finite value");
  }

  bool operator==(const FeatureSequence&) const = default;
};

using Labels = std::array<std::uint8_t, kTaskCount>;

struct ParticipantRecord {
  std::string id;
  /// Single-modal features; an empty optional means the modality is unavailable.
  std::array<std::optional<FeatureSequence>, kSingleModalCount> features;
  Labels labels{};

  bool available(ModalityId m) const { return features.at(index(m)).has_value(); }
  int label(TaskId t) const { return labels[index(t)]; }

  bool operator==(const ParticipantRecord&) const = default;
};

struct IngestedSource {
  std::string manifest_path;
  bool operator==(const IngestedSource&) const = default;
};
struct SyntheticSource {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  bool operator==(const SyntheticSource&) const = default;
};
using Provenance = std::variant<IngestedSource, SyntheticSource>;

/// Immutable collection of participant records.
class Dataset {
 public:
  Dataset(std::vector<ParticipantRecord> records, Provenance provenance)
      : records_(std::move(records)), provenance_(std::move(provenance)) {
    validate();
  }

  const std::vector<ParticipantRecord>& records() const noexcept { return records_; }
  const ParticipantRecord& operator[](std::size_t i) const { return records_.at(i); }
  std::size_t size() const noexcept { return records_.size(); }
  const Provenance& provenance() const noexcept { return provenance_; }

  std::vector<int> labels(TaskId t) const {
    std::vector<int> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.label(t));
    return out;
  }

  /// Feature width of a single-modal input, or nullopt if no record has it.
  std::optional<std::size_t> dim(ModalityId m) const {
    for (const auto& r : records_)
      if (r.available(m)) return r.features[index(m)]->dim();
    return std::nullopt;
  }

  /// Same records, new provenance-independent comparison.
  bool same_records(const Dataset& other) const { return records_ == other.records_; }

 private:
  void validate() const {
    if (records_.empty()) throw DataError("dataset has no records");
    std::set<std::string> seen;
    std::array<std::optional<std::size_t>, kSingleModalCount> dims{};
    for (const auto& r : records_) {
      if (!seen.insert(r.id).second) throw DataError("duplicate record id '" + r.id + "'");
      for (std::size_t m = 0; m < kSingleModalCount; ++m) {
        const auto& f = r.features[m];
        if (!f) continue;
        if (f->modality != modality_at(m))
          throw DataError("record '" + r.id + "' stores a feature under the wrong modality");
        f->validate();
        if (dims[m] && *dims[m] != f->dim())
          throw DataError("record '" + r.id + "' has " + std::to_string(f->dim()) +
                          " columns for " + std::string(kModalityNames[m]) + ", expected " +
                          std::to_string(*dims[m]));
        dims[m] = f->dim();
      }
      for (auto l : r.labels)
        if (l > 1) throw DataError("record '" + r.id + "' has a non-binary label");
    }
  }

  std::vector<ParticipantRecord> records_;
  Provenance provenance_;
};

struct ModalityShape {
  std::size_t min_steps = 1;
  std::size_t max_steps = 1;
  std::size_t dim = 1;
  bool operator==(const ModalityShape&) const = default;
};

using EffectTable = std::array<std::array<double, kSingleModalCount>, kTaskCount>;

/// Synthetic dataset parameters. Positives of a task receive a constant mean
/// shift on every entry of the modalities with a non-zero effect for that task.
struct GeneratorConfig {
  std::size_t n_records = 968;
  std::array<double, kTaskCount> ratios = kDefaultImbalanceRatios;
  EffectTable effects = default_effects();
  std::array<ModalityShape, kSingleModalCount> shapes = default_shapes();
  double noise_sigma = 1.0;
  /// Correlation of the latent scores that decide labels across tasks.
  double label_correlation = 0.3;
  std::array<double, kSingleModalCount> missing_rate{};

  static EffectTable default_effects() {
    EffectTable e{};
    for (std::size_t t = 0; t < kTaskCount; ++t)
      for (std::size_t off : {0u, 3u, 5u}) e[t][(t + off) % kSingleModalCount] = 3.0;
    return e;
  }

  static EffectTable no_effects() { return EffectTable{}; }

  static std::array<ModalityShape, kSingleModalCount> default_shapes() {
    return {{
        {4, 12, 16},   // expression
        {4, 12, 12},   // expression_nuance
        {6, 16, 8},    // eye_movement
        {1, 1, 12},    // physio (already summarised statistics)
        {10, 30, 13},  // mfcc
        {5, 15, 24},   // wav2vec
        {3, 8, 24},    // pert
        {3, 8, 24},    // roberta
    }};
  }

  void validate() const {
    if (n_records < 2) throw ConfigError("generator needs at least 2 records");
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      if (!(ratios[t] > 0.0) || !std::isfinite(ratios[t]))
        throw ConfigError("imbalance ratio for " + std::string(kTaskNames[t]) + " must be > 0");
      for (double d : effects[t])
        if (!(d >= 0.0) || !std::isfinite(d))
          throw ConfigError("effect sizes must be finite and >= 0");
    }
    for (std::size_t m = 0; m < kSingleModalCount; ++m) {
      const auto& s = shapes[m];
      if (s.min_steps < 1 || s.max_steps < s.min_steps || s.dim < 1)
        throw ConfigError("invalid shape for " + std::string(kModalityNames[m]));
      if (!(missing_rate[m] >= 0.0 && missing_rate[m] < 1.0))
        throw ConfigError("missing rate must be in [0, 1)");
    }
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma))
      throw ConfigError("noise_sigma must be > 0");
    if (!(label_correlation >= 0.0 && label_correlation < 1.0))
      throw ConfigError("label_correlation must be in [0, 1)");
  }
};

// ---- JSON ----

inline nlohmann::json to_json(const GeneratorConfig& c) {
  using nlohmann::json;
  json ratios = json::object(), effects = json::object(), shapes = json::object(),
       missing = json::object();
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    ratios[std::string(kTaskNames[t])] = c.ratios[t];
    json row = json::object();
    for (std::size_t m = 0; m < kSingleModalCount; ++m)
      row[std::string(kModalityNames[m])] = c.effects[t][m];
    effects[std::string(kTaskNames[t])] = row;
  }
  for (std::size_t m = 0; m < kSingleModalCount; ++m) {
    const auto& s = c.shapes[m];
    shapes[std::string(kModalityNames[m])] = {
        {"min_steps", s.min_steps}, {"max_steps", s.max_steps}, {"dim", s.dim}};
    missing[std::string(kModalityNames[m])] = c.missing_rate[m];
  }
  return {{"n_records", c.n_records},        {"ratios", ratios},
          {"effects", effects},              {"shapes", shapes},
          {"noise_sigma", c.noise_sigma},    {"label_correlation", c.label_correlation},
          {"missing_rate", missing}};
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys,
                                std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + std::string(where));
}

template <class T>
T get_as(const nlohmann::json& j, std::string_view where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type for " + std::string(where));
  }
}

inline ModalityId modality_key(const std::string& k, std::string_view where, bool single_only) {
  auto m = parse_modality(k);
  if (!m || (single_only && !is_single_modal(*m)))
    throw ConfigError("unknown modality '" + k + "' in " + std::string(where));
  return *m;
}

inline TaskId task_key(const std::string& k, std::string_view where) {
  auto t = parse_task(k);
  if (!t) throw ConfigError("unknown task '" + k + "' in " + std::string(where));
  return *t;
}

}  // namespace detail

/// Partial configs are allowed: absent keys keep their defaults, except that a
/// present `effects` table replaces the default table entirely (unlisted cells
/// become 0). Unknown keys are rejected.
inline GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  using detail::get_as;
  detail::reject_unknown_keys(j, {"n_records", "ratios", "effects", "shapes", "noise_sigma",
                                  "label_correlation", "missing_rate"},
                              "generator config");
  GeneratorConfig c;
  if (j.contains("n_records")) c.n_records = get_as<std::size_t>(j["n_records"], "n_records");
  if (j.contains("noise_sigma")) c.noise_sigma = get_as<double>(j["noise_sigma"], "noise_sigma");
  if (j.contains("label_correlation"))
    c.label_correlation = get_as<double>(j["label_correlation"], "label_correlation");
  if (j.contains("ratios")) {
    if (!j["ratios"].is_object()) throw ConfigError("ratios must be an object");
    for (const auto& [k, v] : j["ratios"].items())
      c.ratios[index(detail::task_key(k, "ratios"))] = get_as<double>(v, "ratios." + k);
  }
  if (j.contains("effects")) {
    if (!j["effects"].is_object()) throw ConfigError("effects must be an object");
    c.effects = GeneratorConfig::no_effects();
    for (const auto& [tk, row] : j["effects"].items()) {
      auto t = detail::task_key(tk, "effects");
      if (!row.is_object()) throw ConfigError("effects." + tk + " must be an object");
      for (const auto& [mk, v] : row.items())
        c.effects[index(t)][index(detail::modality_key(mk, "effects." + tk, true))] =
            get_as<double>(v, "effects." + tk + "." + mk);
    }
  }
  if (j.contains("shapes")) {
    if (!j["shapes"].is_object()) throw ConfigError("shapes must be an object");
    for (const auto& [mk, v] : j["shapes"].items()) {
      auto& s = c.shapes[index(detail::modality_key(mk, "shapes", true))];
      detail::reject_unknown_keys(v, {"min_steps", "max_steps", "dim"}, "shapes." + mk);
      if (v.contains("min_steps")) s.min_steps = get_as<std::size_t>(v["min_steps"], "min_steps");
      if (v.contains("max_steps")) s.max_steps = get_as<std::size_t>(v["max_steps"], "max_steps");
      if (v.contains("dim")) s.dim = get_as<std::size_t>(v["dim"], "dim");
    }
  }
  if (j.contains("missing_rate")) {
    if (!j["missing_rate"].is_object()) throw ConfigError("missing_rate must be an object");
    for (const auto& [mk, v] : j["missing_rate"].items())
      c.missing_rate[index(detail::modality_key(mk, "missing_rate", true))] =
          get_as<double>(v, "missing_rate." + mk);
  }
  c.validate();
  return c;
}

inline std::uint64_t config_hash(const GeneratorConfig& c) { return fnv1a(to_json(c).dump()); }

/// Number of positives that realises `ratio` = negatives / positives in n records.
inline std::size_t positives_for_ratio(std::size_t n, double ratio) {
  auto pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) / (1.0 + ratio)));
  return std::clamp<std::size_t>(pos, 1, n - 1);
}

/// Deterministic synthetic cohort. Labels: for each task, the records with the
/// highest latent scores (shared factor plus task noise) are positive, giving
/// an exact positive count per task. Features: i.i.d. Normal(0, sigma) plus the
/// summed effect of every task the record is positive for.
inline Dataset generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.n_records;
  Rng label_rng(derive_seed(seed, "labels"));
  std::normal_distribution<double> std_normal(0.0, 1.0);

  std::vector<double> shared(n);
  for (auto& g : shared) g = std_normal(label_rng);
  const double a = std::sqrt(cfg.label_correlation), b = std::sqrt(1.0 - cfg.label_correlation);

  std::vector<ParticipantRecord> records(n);
  for (std::size_t r = 0; r < n; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04zu", r);
    records[r].id = buf;
  }

  std::vector<double> score(n);
  std::vector<std::size_t> order(n);
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    for (std::size_t r = 0; r < n; ++r) score[r] = a * shared[r] + b * std_normal(label_rng);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
    const std::size_t pos = positives_for_ratio(n, cfg.ratios[t]);
    for (std::size_t i = 0; i < n; ++i) records[order[i]].labels[t] = i < pos ? 1 : 0;
  }

  for (std::size_t m = 0; m < kSingleModalCount; ++m) {
    Rng rng(derive_seed(derive_seed(seed, "features"), m));
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& shape = cfg.shapes[m];
    std::uniform_int_distribution<std::size_t> steps(shape.min_steps, shape.max_steps);
    for (auto& rec : records) {
      const bool missing = unit(rng) < cfg.missing_rate[m];
      const std::size_t T = steps(rng);
      double shift = 0.0;
      for (std::size_t t = 0; t < kTaskCount; ++t)
        if (rec.labels[t]) shift += cfg.effects[t][m];
      Matrix values(T, shape.dim);
      for (double& v : values.data()) v = noise(rng) + shift;
      if (!missing) rec.features[m] = FeatureSequence{modality_at(m), std::move(values)};
    }
  }
  // A record must keep at least one modality.
  for (auto& rec : records) {
    bool any = false;
    for (const auto& f : rec.features) any = any || f.has_value();
    if (!any) throw ConfigError("missing rates left record '" + rec.id + "' with no modality");
  }
  return Dataset(std::move(records), SyntheticSource{seed, config_hash(cfg)});
}

struct ImbalanceRatio {
  double value = 1.0;  ///< majority count / minority count; +inf when a class is absent
  std::size_t majority = 0;
  std::size_t minority = 0;
  bool degenerate = false;  ///< one class absent
};

inline ImbalanceRatio imbalance_ratio(const Dataset& ds, TaskId task) {
  std::size_t pos = 0;
  for (const auto& r : ds.records()) pos += r.label(task);
  const std::size_t neg = ds.size() - pos;
  ImbalanceRatio out;
  out.majority = std::max(pos, neg);
  out.minority = std::min(pos, neg);
  if (out.minority == 0) {
    out.value = std::numeric_limits<double>::infinity();
    out.degenerate = true;
  } else {
    out.value = static_cast<double>(out.majority) / static_cast<double>(out.minority);
  }
  return out;
}

}  // namespace game
