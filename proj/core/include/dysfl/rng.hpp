// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dysfl/types.hpp"

namespace dysfl {

/// splitmix64 mixing step; used to derive child seeds.
u64 splitmix64(u64 x);

/// Deterministic random stream shared by all modules.
///
/// The core engine is std::mt19937_64 (standardized output sequence) and all
/// value transforms below are implemented here rather than with the standard
/// library distributions, whose output is implementation-defined. Two builds
/// on any platform therefore produce identical streams for the same seed.
class RandomStream {
 public:
  explicit RandomStream(u64 seed) : seed_(seed), engine_(seed) {}

  u64 seed() const { return seed_; }

  u64 next_u64() { return engine_(); }

  /// Uniform double in [0, 1): top 53 bits of one engine draw.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive, bias-free by rejection.
  i64 uniform_int(i64 lo, i64 hi);

  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller; the second value is cached.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[index(items.size())];
  }

  /// Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  /// Independent child stream for element `key`. Children depend only on
  /// (seed, key), so parallel and serial per-item processing agree.
  RandomStream child(u64 key) const {
    return RandomStream(splitmix64(seed_ ^ splitmix64(key + 0x9E3779B97F4A7C15ULL)));
  }

 private:
  u64 seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace dysfl
