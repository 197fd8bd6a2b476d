// SPDX-License-Identifier: Apache-2.0
#include "dysfl/rng.hpp"

#include <cmath>
#include <limits>

namespace dysfl {

u64 splitmix64(u64 x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

i64 RandomStream::uniform_int(i64 lo, i64 hi) {
  if (lo > hi) throw DataError("uniform_int: empty range");
  const u64 range = static_cast<u64>(hi) - static_cast<u64>(lo) + 1;
  if (range == 0) return static_cast<i64>(next_u64());  // full 64-bit range
  const u64 limit = std::numeric_limits<u64>::max() - std::numeric_limits<u64>::max() % range;
  u64 draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return lo + static_cast<i64>(draw % range);
}

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw DataError("index: empty collection");
  return static_cast<std::size_t>(uniform_int(0, static_cast<i64>(n) - 1));
}

double RandomStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on two uniform draws; u1 is kept away from zero.
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

}  // namespace dysfl
