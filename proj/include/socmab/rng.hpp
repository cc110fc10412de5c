#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace socmab {

/// The engine used everywhere randomness is consumed.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, for turning category names into substream keys.
constexpr std::uint64_t hash_key(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Purpose tags for substreams; appending new tags never perturbs existing ones.
enum class Stream : std::uint64_t {
  Condition = 1,
  Baseline = 2,
  ArmChoice = 3,
  Cards = 4,
  Population = 5,
  UserDay = 6,
};

/// Seed for the substream identified by (master, keys...). Streams with distinct
/// key paths are statistically independent; identical paths reproduce exactly.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return Rng{derive_seed(master, keys)};
}

inline Rng substream(std::uint64_t master, Stream tag, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = derive_seed(master, {static_cast<std::uint64_t>(tag)});
  return Rng{derive_seed(s, keys)};
}

}  // namespace socmab
