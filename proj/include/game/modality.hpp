#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace game {

/// Fusion inputs in canonical order: eight single-modal features followed by
/// the two cross-modal ones.
enum class ModalityId : std::size_t {
  expression,
  expression_nuance,
  eye_movement,
  physio,
  mfcc,
  wav2vec,
  pert,
  roberta,
  relation_graph,
  attention,
};

inline constexpr std::size_t kSingleModalCount = 8;
inline constexpr std::size_t kFusionInputCount = 10;

inline constexpr std::array<std::string_view, kFusionInputCount> kModalityNames = {
    "expression", "expression_nuance", "eye_movement", "physio",         "mfcc",
    "wav2vec",    "pert",              "roberta",      "relation_graph", "attention",
};

constexpr std::size_t index(ModalityId m) noexcept { return static_cast<std::size_t>(m); }
constexpr std::string_view name(ModalityId m) noexcept { return kModalityNames[index(m)]; }
constexpr bool is_single_modal(ModalityId m) noexcept { return index(m) < kSingleModalCount; }
constexpr ModalityId modality_at(std::size_t i) noexcept { return static_cast<ModalityId>(i); }

inline std::optional<ModalityId> parse_modality(std::string_view s) {
  for (std::size_t i = 0; i < kFusionInputCount; ++i)
    if (kModalityNames[i] == s) return modality_at(i);
  return std::nullopt;
}

/// The twelve screened conditions; `overall` is the aggregate mental health status.
enum class TaskId : std::size_t {
  depression,
  interpersonal_sensitivity,
  anxiety,
  obsessive_compulsive,
  paranoid_ideation,
  hostility,
  academic_stress,
  maladaptation,
  emotional_disturbance,
  psychological_imbalance,
  suicidal_tendency,
  overall,
};

inline constexpr std::size_t kTaskCount = 12;
/// Disorders only (`overall` excluded), used by the comorbidity matrix.
inline constexpr std::size_t kDisorderCount = 11;

inline constexpr std::array<std::string_view, kTaskCount> kTaskNames = {
    "depression",         "interpersonal_sensitivity", "anxiety",
    "obsessive_compulsive", "paranoid_ideation",       "hostility",
    "academic_stress",    "maladaptation",             "emotional_disturbance",
    "psychological_imbalance", "suicidal_tendency",    "overall",
};

/// Negative:positive label ratios observed in the screening cohort.
inline constexpr std::array<double, kTaskCount> kDefaultImbalanceRatios = {
    2.44, 5.31, 2.21, 6.56, 1.64, 4.53, 4.87, 1.66, 2.25, 4.09, 2.71, 4.90,
};

constexpr std::size_t index(TaskId t) noexcept { return static_cast<std::size_t>(t); }
constexpr std::string_view name(TaskId t) noexcept { return kTaskNames[index(t)]; }
constexpr TaskId task_at(std::size_t i) noexcept { return static_cast<TaskId>(i); }

inline std::optional<TaskId> parse_task(std::string_view s) {
  for (std::size_t i = 0; i < kTaskCount; ++i)
    if (kTaskNames[i] == s) return task_at(i);
  return std::nullopt;
}

}  // namespace game
