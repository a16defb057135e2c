#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace cgn {

/// SplitMix64 finalizer. Used both for seed derivation and feature hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed and a small salt.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(seed ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

/// FNV-1a over bytes, salted, then finalized with mix64.
constexpr std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t salt) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(salt);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

// Deterministic random source. The distributions are written out by hand
// rather than taken from <random> because the standard ones are not
// required to produce identical sequences across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return static_cast<std::size_t>(r % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cgn
