#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fitted {

using Rng = std::mt19937_64;

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a over bytes.
constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for an independent stream identified by (parent, index).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Seed for a named pipeline stage: mix64(master ^ fnv1a(stage)).
constexpr std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) noexcept {
  return mix64(master ^ fnv1a(stage));
}

}  // namespace fitted
