#pragma once

#include <cstdint>

namespace chowla {

// splitmix64; mapping to doubles is spelled out so streams are identical
// across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [lo, hi] inclusive
  uint64_t uniform_u64(uint64_t lo, uint64_t hi) {
    return lo + next_u64() % (hi - lo + 1);
  }

 private:
  uint64_t state_;
};

}  // namespace chowla
