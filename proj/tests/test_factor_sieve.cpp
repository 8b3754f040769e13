#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "chowla/factor_sieve.hpp"
#include "chowla/rng.hpp"
#include "oracles.hpp"

using namespace chowla;

namespace {
FactorBlock sieve_range(uint64_t lo, uint64_t hi) {
  PrimeTable base = PrimeTable::upto(
      static_cast<uint64_t>(std::sqrt(static_cast<double>(hi))) + 2);
  return FactorBlock::sieve(lo, hi, base, hi - lo);
}
}  // namespace

TEST_CASE("hand-factorized values: n = 1, 12, 30") {
  FactorBlock b = sieve_range(1, 64);
  CHECK(b.omega(1) == 0);
  CHECK(b.liouville(1) == 1);
  CHECK(b.squarefree(1));
  CHECK(b.largest_prime_factor(1) == 1);

  CHECK(b.omega(12) == 3);
  CHECK(b.liouville(12) == -1);
  CHECK(!b.squarefree(12));
  CHECK(b.largest_prime_factor(12) == 3);

  CHECK(b.omega(30) == 3);
  CHECK(b.liouville(30) == -1);
  CHECK(b.squarefree(30));
  CHECK(b.largest_prime_factor(30) == 5);
}

TEST_CASE("mobius examples") {
  FactorBlock b = sieve_range(1, 64);
  CHECK(b.mobius(1) == 1);
  CHECK(b.mobius(4) == 0);
  CHECK(b.mobius(30) == -1);
  CHECK_THROWS_AS(b.check_contains(64), std::out_of_range);
}

TEST_CASE("trial-division oracle equivalence up to 1e5") {
  const uint64_t N = 100000;
  FactorBlock b = sieve_range(1, N + 1);
  for (uint64_t n = 1; n <= N; ++n) {
    oracle::Factorization f = oracle::factorize(n);
    REQUIRE(b.omega(n) == f.omega);
    REQUIRE(b.liouville(n) == (f.omega % 2 ? -1 : 1));
    REQUIRE(b.squarefree(n) == f.squarefree);
    REQUIRE(b.largest_prime_factor(n) == f.pplus);
  }
}

TEST_CASE("segmentation independence: one block vs 16 sub-blocks") {
  const uint64_t N = 1000000;
  FactorBlock whole = sieve_range(1, N + 1);
  PrimeTable base = PrimeTable::upto(1100);
  uint64_t step = N / 16;
  for (int k = 0; k < 16; ++k) {
    uint64_t lo = 1 + k * step;
    uint64_t hi = (k == 15) ? N + 1 : lo + step;
    FactorBlock part = FactorBlock::sieve(lo, hi, base, N);
    for (uint64_t n = lo; n < hi; ++n) {
      REQUIRE(part.omega(n) == whole.omega(n));
      REQUIRE(part.liouville(n) == whole.liouville(n));
      REQUIRE(part.squarefree(n) == whole.squarefree(n));
      REQUIRE(part.largest_prime_factor(n) == whole.largest_prime_factor(n));
    }
  }
}

TEST_CASE("complete multiplicativity of lambda on random pairs") {
  Rng rng(20240901);
  FactorBlock small = sieve_range(1, 1u << 16);
  for (int trial = 0; trial < 10000; ++trial) {
    uint64_t n = rng.uniform_u64(1, 31622);
    uint64_t m = rng.uniform_u64(1, 31622);
    uint64_t nm = n * m;  // <= 1e9
    FactorBlock prod = sieve_range(nm, nm + 1);
    REQUIRE(small.liouville(n) * small.liouville(m) == prod.liouville(nm));
  }
}

TEST_CASE("prime_iter basics") {
  CHECK(primes_in(1, 10) == std::vector<uint64_t>{2, 3, 5, 7});
  CHECK(primes_in(14, 16).empty());
  CHECK(primes_in(1, 100).size() == 25);

  // brute-force pi(X) cross-check
  uint64_t count = 0;
  for (uint64_t n = 1; n < 100; ++n)
    if (oracle::is_prime(n)) ++count;
  CHECK(count == 25);

  // ascending order and exactness over a mid-range window
  auto ps = primes_in(100000, 101000);
  for (size_t i = 0; i + 1 < ps.size(); ++i) REQUIRE(ps[i] < ps[i + 1]);
  for (uint64_t p : ps) REQUIRE(oracle::is_prime(p));
  for (uint64_t n = 100000; n < 101000; ++n)
    if (oracle::is_prime(n))
      REQUIRE(std::find(ps.begin(), ps.end(), n) != ps.end());
}

TEST_CASE("Mertens-type envelope for the Liouville summatory") {
  const uint64_t N = 1000000;
  FactorBlock b = sieve_range(1, N + 1);
  int64_t L = 0;
  for (uint64_t n = 1; n <= N; ++n) L += b.liouville(n);
  MESSAGE("L(1e6) = ", L);
  CHECK(std::llabs(L) < 1000);
  CHECK(L == -530);  // exact value from the trial-division oracle run
}

TEST_CASE("precondition errors") {
  PrimeTable base = PrimeTable::upto(100);
  CHECK_THROWS_AS(FactorBlock::sieve(0, 10, base), std::invalid_argument);
  CHECK_THROWS_AS(FactorBlock::sieve(10, 10, base), std::invalid_argument);
  // insufficient base primes: bound^2 < hi
  CHECK_THROWS_AS(FactorBlock::sieve(1, 100 * 100 + 2, base, 1u << 20), std::invalid_argument);
  // range too large
  CHECK_THROWS_AS(FactorBlock::sieve(1, 1000, base, 100), std::invalid_argument);
}

TEST_CASE("block cache round-trip is bit-exact") {
  FactorBlock b = sieve_range(1000, 5000);
  std::stringstream ss;
  b.save(ss);
  FactorBlock c = FactorBlock::load(ss);
  CHECK(b == c);
  CHECK(c.lo() == 1000);
  CHECK(c.hi() == 5000);
  CHECK(c.omega(1024) == 10);

  // header validation
  std::stringstream bad("nope");
  CHECK_THROWS(FactorBlock::load(bad));
}
