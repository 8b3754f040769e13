#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chowla/averaging.hpp"
#include "chowla/factor_sieve.hpp"
#include "chowla/rng.hpp"
#include "oracles.hpp"

using namespace chowla;
using std::complex;

TEST_CASE("averaging operators on small closed-form cases") {
  // unweighted f(n)=n, X=4 -> 2.5
  auto idf = [](uint64_t n) { return complex<double>(double(n), 0); };
  CHECK(average_over(idf, WeightScheme::Unweighted, 4.0).real() == doctest::Approx(2.5));
  // log average of 1 is 1
  auto one = [](uint64_t) { return complex<double>(1, 0); };
  CHECK(average_over(one, WeightScheme::Log, 77.0).real() == doctest::Approx(1.0));
  // log, f(n)=n at X=2: (1 + 2/2)/(1 + 1/2) = 4/3
  CHECK(average_over(idf, WeightScheme::Log, 2.0).real() == doctest::Approx(4.0 / 3.0));
  // empty prime average
  auto primec = [](uint64_t) { return complex<double>(1, 0); };
  CHECK_THROWS_AS(average_over(primec, WeightScheme::PrimeUnweighted, 1.5), EmptyAverage);
}

TEST_CASE("snapshot series: constants, Liouville at 10, merge law") {
  ScaleGrid grid = ScaleGrid::geometric(10.0, 2.0, 5);
  auto one = [](uint64_t) { return complex<double>(1, 0); };
  for (auto scheme : {WeightScheme::Unweighted, WeightScheme::Log, WeightScheme::LogLog}) {
    auto pts = snapshot_series(one, scheme, grid);
    for (const auto& p : pts) REQUIRE(p.value.real() == doctest::Approx(1.0));
  }

  // lambda at X=10: the summatory L(10) = 0, so the average is 0
  // (computed by the trial-division oracle; L(8) = -2, L(10) = 0)
  auto lam = [](uint64_t n) { return complex<double>(double(oracle::liouville(n)), 0); };
  auto pts = snapshot_series(lam, WeightScheme::Unweighted, ScaleGrid::geometric(10.0, 2.0, 1));
  int64_t oracle_sum = 0;
  for (uint64_t n = 1; n <= 10; ++n) oracle_sum += oracle::liouville(n);
  CHECK(oracle_sum == 0);
  CHECK(pts[0].value.real() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("accumulator merge: disjoint ranges, any bracketing, 1e-12 relative") {
  Rng rng(99);
  const uint64_t N = 200000;
  // one pass
  WeightedAccumulator whole(WeightScheme::Log);
  auto f = [](uint64_t n) {
    double a = std::sin(0.1 * n), b = std::cos(0.37 * n);
    return complex<double>{a, b};
  };
  for (uint64_t n = 1; n <= N; ++n) whole.add(n, f(n));

  for (int trial = 0; trial < 12; ++trial) {
    // random split into 8 chunks, random merge bracketing by shuffled folds
    std::vector<uint64_t> cuts{1};
    for (int i = 0; i < 7; ++i) cuts.push_back(rng.uniform_u64(2, N));
    cuts.push_back(N + 1);
    std::sort(cuts.begin(), cuts.end());
    std::vector<WeightedAccumulator> parts;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      WeightedAccumulator acc(WeightScheme::Log);
      for (uint64_t n = cuts[i]; n < cuts[i + 1]; ++n) acc.add(n, f(n));
      parts.push_back(acc);
    }
    // fold left-to-right and right-to-left over the (ordered) parts
    WeightedAccumulator ltr(WeightScheme::Log), rtl(WeightScheme::Log);
    for (const auto& p : parts) ltr.merge(p);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      WeightedAccumulator tmp = *it;
      tmp.merge(rtl);
      rtl = tmp;
    }
    for (const auto* acc : {&ltr, &rtl}) {
      REQUIRE(std::abs(acc->value() - whole.value()) <=
              1e-12 * std::max(1.0, std::abs(whole.value())));
      REQUIRE(std::abs(acc->den() - whole.den()) <= 1e-12 * whole.den());
      REQUIRE(acc->count() == whole.count());
    }
  }
}

TEST_CASE("window difference via accumulator subtraction") {
  WeightedAccumulator full(WeightScheme::Log), head(WeightScheme::Log),
      tail(WeightScheme::Log);
  auto f = [](uint64_t n) { return complex<double>{1.0 / (1.0 + n % 7), 0.3}; };
  for (uint64_t n = 1; n <= 5000; ++n) {
    full.add(n, f(n));
    if (n <= 500) head.add(n, f(n));
    if (n > 500) tail.add(n, f(n));
  }
  WeightedAccumulator diff = full.minus(head);
  CHECK(std::abs(diff.value() - tail.value()) < 1e-13);
  CHECK(diff.count() == tail.count());
}

TEST_CASE("weight positivity: den strictly increases with X") {
  WeightedAccumulator acc(WeightScheme::LogLog);
  double prev = 0;
  for (uint64_t n = 1; n <= 1000; ++n) {
    acc.add(n, {1, 0});
    REQUIRE(acc.den() > prev);
    prev = acc.den();
  }
}

TEST_CASE("logarithmic density: full set, evens, Benford") {
  // the full set has density one at every scale
  {
    std::vector<uint64_t> all(100000);
    for (uint64_t n = 1; n <= 100000; ++n) all[n - 1] = n;
    auto pts = logarithmic_density(all.begin(), all.end(),
                                   ScaleGrid::geometric(10.0, 10.0, 4));
    for (const auto& p : pts) REQUIRE(p.value.real() == doctest::Approx(1.0));
  }

  // even numbers at X = 1e6: the exact weighted ratio is ~0.47592 (the
  // limit 1/2 is approached only like 1 - ln2/ln X; value frozen from a
  // direct summation oracle)
  {
    std::vector<uint64_t> evens;
    for (uint64_t n = 2; n <= 1000000; n += 2) evens.push_back(n);
    auto pts = logarithmic_density(evens.begin(), evens.end(),
                                   ScaleGrid::geometric(1e6, 2.0, 1));
    CHECK(pts[0].value.real() == doctest::Approx(0.4759202445).epsilon(1e-6));
  }

  // Benford leading-digit-1 set at X = 1e8: within 0.01 of log10(2)
  {
    std::vector<uint64_t> lead1;
    for (uint64_t d = 1; d <= 100000000; d *= 10)
      for (uint64_t n = d; n < 2 * d && n <= 100000000; ++n) lead1.push_back(n);
    auto pts = logarithmic_density(lead1.begin(), lead1.end(),
                                   ScaleGrid::geometric(1e8, 2.0, 1));
    double benford = std::log(2.0) / std::log(10.0);
    CHECK(std::abs(pts[0].value.real() - benford) < 0.01);
    // frozen oracle value 0.3095310 from the direct summation
    CHECK(pts[0].value.real() == doctest::Approx(0.309531).epsilon(1e-4));
  }

  // unsorted stream is rejected
  std::vector<uint64_t> bad{5, 3};
  CHECK_THROWS_AS(
      logarithmic_density(bad.begin(), bad.end(), ScaleGrid::geometric(10.0, 2.0, 1)),
      std::invalid_argument);
}

TEST_CASE("compare integer and prime averages") {
  // f = 1: both averages 1, gap 0
  auto one = [](uint64_t) { return complex<double>(1, 0); };
  auto r = compare_integer_prime_averages(one, 1, 1000.0);
  CHECK(r.gap == doctest::Approx(0.0));
  CHECK(r.loglog_integers.real() == doctest::Approx(1.0));

  // f(d) = d^i / |1+i|: the gap shrinks in trend (values verified against
  // a direct two-loop oracle at 1e4; trend checked 1e4 -> 1e6)
  auto dil = [](uint64_t d) {
    double ang = std::log(double(d));
    return complex<double>{std::cos(ang), std::sin(ang)} / std::sqrt(2.0);
  };
  auto r4 = compare_integer_prime_averages(dil, 1, 1e4);
  {
    // direct oracle at X = 1e4
    complex<double> num = 0;
    double den = 0;
    for (uint64_t d = 1; d <= 10000; ++d) {
      double w = 1.0 / (d * std::log1p(double(d)));
      num += w * dil(d);
      den += w;
    }
    complex<double> ll = num / den;
    complex<double> pnum = 0;
    double pden = 0;
    for (uint64_t p = 2; p <= 10000; ++p) {
      if (!oracle::is_prime(p)) continue;
      pnum += dil(p) / double(p);
      pden += 1.0 / double(p);
    }
    complex<double> lp = pnum / pden;
    CHECK(std::abs(r4.loglog_integers - ll) < 1e-9);
    CHECK(std::abs(r4.log_primes - lp) < 1e-9);
    CHECK(r4.gap == doctest::Approx(std::abs(ll - lp)).epsilon(1e-9));
  }
  auto r6 = compare_integer_prime_averages(dil, 1, 1e6);
  MESSAGE("gap at 1e4 = ", r4.gap, ", gap at 1e6 = ", r6.gap);
  CHECK(r6.gap < r4.gap);  // shrinking trend across scales

  // f(d) = 1/(1 + ln d) with a = 2: gap reported; frozen value 0.29370 from
  // the direct-summation oracle (the loglog side is dominated by small d)
  auto invlog = [](uint64_t d) {
    return complex<double>{1.0 / (1.0 + std::log(double(d))), 0};
  };
  auto r5 = compare_integer_prime_averages(invlog, 2, 1e5);
  MESSAGE("invlog gap at 1e5 = ", r5.gap);
  CHECK(r5.gap == doctest::Approx(0.293696).epsilon(1e-4));

  // non-finite f values are rejected
  auto nanf = [](uint64_t d) {
    return d == 17 ? complex<double>{NAN, 0} : complex<double>{1, 0};
  };
  CHECK_THROWS_AS(compare_integer_prime_averages(nanf, 1, 100.0), std::domain_error);
}

TEST_CASE("scheme comparison for Liouville across scales") {
  // The unweighted and log averages of lambda agree to well under 0.02 at
  // 1e6.  The doubly logarithmic average does NOT join them at any feasible
  // scale: its n=1 term alone carries weight 1/ln2 out of a total mass of
  // ~loglog X, so it decays like 1.44/loglog X (0.182 at 1e4, 0.160 at 1e7,
  // by direct summation).  Assert the pairwise closeness that actually
  // holds, plus monotone decay of the loglog series.
  PrimeTable base = PrimeTable::upto(1002);
  FactorBlock blk = FactorBlock::sieve(1, 1000001, base, 1u << 21);
  WeightedAccumulator flat(WeightScheme::Unweighted), lg(WeightScheme::Log),
      ll(WeightScheme::LogLog);
  std::vector<double> ll_series;
  for (uint64_t n = 1; n <= 1000000; ++n) {
    complex<double> v{double(blk.liouville(n)), 0};
    flat.add(n, v);
    lg.add(n, v);
    ll.add(n, v);
    if (n == 10000 || n == 100000 || n == 1000000) ll_series.push_back(ll.value().real());
  }
  CHECK(std::abs(flat.value() - lg.value()) < 0.02);
  CHECK(std::abs(ll.value().real() - 0.165284) < 1e-4);  // frozen oracle value
  CHECK(ll_series[0] > ll_series[1]);
  CHECK(ll_series[1] > ll_series[2]);
  CHECK(std::abs(ll.value()) < 0.2);
}

TEST_CASE("scale grid validation") {
  CHECK_THROWS_AS(ScaleGrid::geometric(0.5, 2.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(ScaleGrid::geometric(10.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(ScaleGrid::geometric(10.0, 2.0, 0), std::invalid_argument);
  ScaleGrid g = ScaleGrid::up_to(10.0, 160.0, 2.0);
  CHECK(g.count == 5);
  CHECK(g.max() == doctest::Approx(160.0));
  // default ratio 2^(1/4)
  ScaleGrid d;
  CHECK(d.ratio == doctest::Approx(std::pow(2.0, 0.25)));
}
