#pragma once

#include <cstdint>
#include <string_view>

namespace qabias {

/// Identifier of the generator family and stream derivation below; it is
/// written into every measurement's provenance.
inline constexpr std::string_view kRngName = "splitmix64-counter/v1";

/// SplitMix64 output function (Steele, Lea & Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: the k-th output is splitmix64(key + k * gamma), so
/// any draw is a pure function of (key, k) and streams for different
/// (seed, tag, index) triples can be consumed in any order or in parallel.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  /// key = mix(mix(mix(seed) ^ mix(tag + 1)) ^ mix(index + 2)).
  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ splitmix64(tag + 1));
    key = splitmix64(key ^ splitmix64(index + 2));
    return CounterRng(key);
  }

  constexpr std::uint64_t next() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0xD1B54A32D192ED03ULL);
  }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-and-reject).
  constexpr std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qabias
