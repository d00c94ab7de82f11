#ifndef FAIRBOOST_RANDOM_HPP_
#define FAIRBOOST_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace fairboost {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a named stream, optionally indexed (round, trial, repeat).
/// All randomness in the library and the CLI is derived through this function
/// from a single root seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(seed ^ fnv1a(stream)) + index);
}

}  // namespace fairboost

#endif  // FAIRBOOST_RANDOM_HPP_
