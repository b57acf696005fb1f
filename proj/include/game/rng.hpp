#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace game {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::span<const double> values,
                           std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(values.data()),
                                values.size_bytes()),
               h);
}

/// Independent sub-seed for a named consumer of a parent seed.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
  return splitmix64(parent ^ fnv1a(tag));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Per-fold seed: master XOR fold index.
constexpr std::uint64_t fold_seed(std::uint64_t master, std::size_t fold) noexcept {
  return master ^ static_cast<std::uint64_t>(fold);
}

}  // namespace game
