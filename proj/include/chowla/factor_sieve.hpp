#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chowla/bits.hpp"

namespace chowla {

constexpr uint64_t kDefaultSegment = uint64_t{1} << 22;

// All primes <= bound, ascending.  bound^2 must cover the largest value any
// block sieved against this table may contain.
struct PrimeTable {
  uint64_t bound = 0;
  std::vector<uint32_t> primes;

  static PrimeTable upto(uint64_t bound);
};

// Exact per-integer arithmetic data for a half-open range [lo, hi):
//   omega(n)  = number of prime factors with multiplicity
//   liouville = (-1)^omega(n)
//   squarefree flag
//   P+(n)     = largest prime factor, with P+(1) = 1
//
// Built by the "divide out base primes" segmented method: each base prime
// p <= sqrt(hi) divides its multiples out of a residual array; whatever
// residual exceeds 1 afterwards is itself a prime > sqrt(hi), contributing
// one to omega and winning the P+ slot.
class FactorBlock {
 public:
  static FactorBlock sieve(uint64_t lo, uint64_t hi, const PrimeTable& base,
                           uint64_t segment_cap = kDefaultSegment);

  uint64_t lo() const { return lo_; }
  uint64_t hi() const { return hi_; }
  uint64_t size() const { return hi_ - lo_; }
  bool contains(uint64_t n) const { return n >= lo_ && n < hi_; }

  uint8_t omega(uint64_t n) const { return omega_[n - lo_]; }
  int liouville(uint64_t n) const { return liouville_.get(n - lo_) ? -1 : 1; }
  bool squarefree(uint64_t n) const { return squarefree_.get(n - lo_); }
  uint64_t largest_prime_factor(uint64_t n) const { return pplus_[n - lo_]; }
  bool is_prime(uint64_t n) const {
    return omega_[n - lo_] == 1 && pplus_[n - lo_] == n;
  }

  // mu(n) = liouville(n) on squarefree n, 0 elsewhere
  int mobius(uint64_t n) const {
    return squarefree_.get(n - lo_) ? liouville(n) : 0;
  }

  void check_contains(uint64_t n) const;

  // Disk cache: header {magic "CHLB", version u32, lo u64, hi u64} followed
  // by the packed arrays, little-endian throughout.
  void save(std::ostream& os) const;
  static FactorBlock load(std::istream& is);
  void save_file(const std::string& path) const;
  static FactorBlock load_file(const std::string& path);

  bool operator==(const FactorBlock& o) const;

 private:
  FactorBlock() = default;

  uint64_t lo_ = 0, hi_ = 0;
  std::vector<uint8_t> omega_;
  std::vector<uint64_t> pplus_;
  PackedBits squarefree_;
  PackedBits liouville_;  // bit set <=> lambda(n) = -1
};

// Ordered stream of primes in [lo, hi); segmented, ascending.
void for_primes(uint64_t lo, uint64_t hi, const std::function<void(uint64_t)>& fn);
std::vector<uint64_t> primes_in(uint64_t lo, uint64_t hi);

}  // namespace chowla
