#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "chowla/correlation.hpp"
#include "oracles.hpp"

using namespace chowla;
using std::complex;

namespace {

// naive double-loop correlation oracle: E^{scheme}_{n <= X/d} prod g_i(n + a h_i)
complex<double> brute_correlation(const std::vector<FunctionSpec>& fns,
                                  const std::vector<int64_t>& shifts, int64_t a, double d,
                                  WeightScheme scheme, double X) {
  uint64_t N = static_cast<uint64_t>(X / d);
  uint64_t hi = N + 1;
  for (int64_t h : shifts) hi = std::max<uint64_t>(hi, N + 1 + std::llabs(a * h) + 1);
  PrimeTable base = PrimeTable::upto(static_cast<uint64_t>(std::sqrt(double(hi))) + 2);
  FactorBlock blk = FactorBlock::sieve(1, hi, base, hi);
  std::vector<Evaluator> evals;
  for (const auto& f : fns) evals.emplace_back(f);
  complex<double> num = 0;
  double den = 0;
  for (uint64_t n = 1; n <= N; ++n) {
    if (prime_only(scheme) && !oracle::is_prime(n)) continue;
    double w = scheme_weight(scheme, n);
    complex<double> prod = 1;
    for (size_t i = 0; i < evals.size(); ++i)
      prod *= evals[i](blk, static_cast<int64_t>(n) + a * shifts[i]);
    num += w * prod;
    den += w;
  }
  return num / den;
}

CorrelationQuery lambda_pair_query(double max_scale) {
  CorrelationQuery q;
  q.functions = {FunctionSpec::liouville(), FunctionSpec::liouville()};
  q.shifts = {0, 1};
  q.grid = ScaleGrid::up_to(10.0, max_scale, 2.0);
  return q;
}

}  // namespace

TEST_CASE("trivial correlations") {
  // lambda(n)^2 = 1 identically
  CorrelationQuery q;
  q.functions = {FunctionSpec::liouville(), FunctionSpec::liouville()};
  q.shifts = {0, 0};
  q.grid = ScaleGrid::geometric(10.0, 4.0, 4);
  auto s = correlate(q);
  for (auto v : s.values) REQUIRE(v.real() == doctest::Approx(1.0));

  // k=1 principal character mod 1
  CorrelationQuery q1;
  q1.functions = {FunctionSpec::one()};
  q1.shifts = {3};
  q1.grid = ScaleGrid::geometric(10.0, 4.0, 4);
  auto s1 = correlate(q1);
  for (auto v : s1.values) REQUIRE(v.real() == doctest::Approx(1.0));
}

TEST_CASE("two-point Liouville at X=10 equals -0.4") {
  CorrelationQuery q = lambda_pair_query(10.0);
  q.grid = ScaleGrid::geometric(10.0, 2.0, 1);
  auto s = correlate(q);
  CHECK(s.values[0].real() == doctest::Approx(-0.4));
  // cross-checked against the double-loop oracle
  auto b = brute_correlation(q.functions, q.shifts, 1, 1.0, WeightScheme::Unweighted, 10.0);
  CHECK(b.real() == doctest::Approx(-0.4));
}

TEST_CASE("brute-force equivalence at X <= 1e4 to 1e-12") {
  struct Case {
    std::vector<FunctionSpec> fns;
    std::vector<int64_t> shifts;
    int64_t a;
    double d;
    WeightScheme scheme;
  };
  std::vector<Case> cases;
  cases.push_back({{FunctionSpec::liouville(), FunctionSpec::liouville()},
                   {0, 1},
                   1,
                   1.0,
                   WeightScheme::Unweighted});
  cases.push_back({{FunctionSpec::liouville(), FunctionSpec::liouville(),
                    FunctionSpec::liouville()},
                   {0, 1, 2},
                   1,
                   1.0,
                   WeightScheme::Log});
  cases.push_back({{FunctionSpec::lambda_q(3), FunctionSpec::lambda_q(3)},
                   {0, 2},
                   3,
                   2.5,
                   WeightScheme::Unweighted});
  cases.push_back({{FunctionSpec::character(4, 1), FunctionSpec::moebius()},
                   {-1, 1},
                   2,
                   1.0,
                   WeightScheme::LogLog});
  cases.push_back({{FunctionSpec::archimedean(1.5)}, {0}, 1, 1.0, WeightScheme::Unweighted});
  cases.push_back({{FunctionSpec::liouville(), FunctionSpec::liouville()},
                   {0, 1},
                   1,
                   1.0,
                   WeightScheme::PrimeLog});

  for (const auto& c : cases) {
    CorrelationQuery q;
    q.functions = c.fns;
    q.shifts = c.shifts;
    q.dilation = c.a;
    q.divisor = c.d;
    q.scheme = c.scheme;
    q.grid = ScaleGrid::geometric(100.0, 10.0, 3);  // 100, 1000, 10000
    auto s = correlate(q);
    for (int j = 0; j < 3; ++j) {
      complex<double> want =
          brute_correlation(c.fns, c.shifts, c.a, c.d, c.scheme, q.grid.scale(j));
      REQUIRE(std::abs(s.values[j] - want) < 1e-12);
    }
  }
}

TEST_CASE("1-boundedness and the log-Lipschitz bound along the series") {
  CorrelationQuery q = lambda_pair_query(100000.0);
  auto s = correlate(q);
  for (size_t j = 0; j < s.values.size(); ++j) {
    REQUIRE(std::abs(s.values[j]) <= 1.0 + 1e-12);
    if (j > 0) {
      double lhs = std::abs(s.values[j] - s.values[j - 1]);
      double rhs = 2.0 * std::abs(std::log(s.scales[j]) - std::log(s.scales[j - 1])) +
                   4.0 * q.divisor / s.scales[j - 1];
      REQUIRE(lhs <= rhs + 1e-12);
    }
  }
}

TEST_CASE("shift-translation consistency") {
  // replacing n by n+c and h_i by h_i - c changes S(X) by O((|c|+1)/X)
  const double X = 20000.0;
  const int64_t c = 3;
  auto base = brute_correlation({FunctionSpec::liouville(), FunctionSpec::liouville()}, {0, 1},
                                1, 1.0, WeightScheme::Unweighted, X);
  CorrelationQuery q;
  q.functions = {FunctionSpec::liouville(), FunctionSpec::liouville()};
  q.shifts = {0 - c, 1 - c};
  q.grid = ScaleGrid::geometric(X, 2.0, 1);
  auto s = correlate(q);
  // the translated sum differs only in O(c) boundary terms of size 1/N
  CHECK(std::abs(s.values[0] - base) <= 2.0 * (std::abs(double(c)) + 1.0) / X + 1e-12);
}

TEST_CASE("conjugation yields the conjugate series exactly") {
  CorrelationQuery q;
  q.functions = {FunctionSpec::lambda_q(3), FunctionSpec::archimedean(0.8)};
  q.shifts = {0, 1};
  q.grid = ScaleGrid::geometric(100.0, 4.0, 4);
  auto s = correlate(q);
  CorrelationQuery qc = q;
  qc.functions = {FunctionSpec::conjugate(FunctionSpec::lambda_q(3)),
                  FunctionSpec::conjugate(FunctionSpec::archimedean(0.8))};
  auto sc = correlate(qc);
  for (size_t j = 0; j < s.values.size(); ++j)
    REQUIRE(std::abs(sc.values[j] - std::conj(s.values[j])) == 0.0);
}

TEST_CASE("fd_table: constants, archimedean closed form, least-squares diagnostic") {
  // all g = 1: f_d(a) = 1, fitted residual 0 at t = 0
  {
    FdTable t = fd_table({FunctionSpec::one()}, {0}, {1.0, 2.0, 4.0}, {1, 2}, 1000.0, 0.0);
    for (const auto& row : t.fda)
      for (auto v : row) REQUIRE(std::abs(v - complex<double>{1, 0}) < 1e-12);
    for (const auto& d : t.diag) {
      REQUIRE(std::abs(d.fhat - complex<double>{1, 0}) < 1e-12);
      REQUIRE(d.residual < 1e-12);
    }
  }

  // single archimedean factor: d^{it0} f_d(a) is d-independent up to O(d/X)
  {
    const double t0 = 1.5, X = 200000.0;
    FdTable t = fd_table({FunctionSpec::archimedean(t0)}, {0}, {1.0, 2.0, 4.0, 8.0}, {1}, X, t0);
    complex<double> expect_mag{1.0 / std::abs(complex<double>{1.0, t0}), 0};
    for (size_t di = 0; di < t.divisors.size(); ++di) {
      complex<double> rot{std::cos(t0 * std::log(t.divisors[di])),
                          std::sin(t0 * std::log(t.divisors[di]))};
      complex<double> v = t.fda[0][di] * rot;
      // closed form E_{n<=Y} n^{it} = Y^{it}/(1+it) + O(1/Y)
      double Y = X / t.divisors[di];
      complex<double> cf = std::pow(complex<double>{Y, 0}, complex<double>{0, t0}) /
                           complex<double>{1.0, t0};
      complex<double> cf_rot = cf * std::pow(complex<double>{Y, 0}, complex<double>{0, -t0}) *
                               std::pow(complex<double>{X, 0}, complex<double>{0, t0});
      (void)cf_rot;
      REQUIRE(std::abs(std::abs(v) - std::abs(expect_mag)) < 5.0 / Y + 1e-6);
      REQUIRE(std::abs(t.fda[0][di] - cf) < 5.0 / Y);
    }
    // the loglog-weighted fit reproduces a small residual at the true t
    CHECK(t.diag[0].residual < 1e-3);
  }

  CHECK_THROWS_AS(fd_table({FunctionSpec::one()}, {0}, {}, {1}, 100.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(fd_table({FunctionSpec::one()}, {0}, {200.0}, {1}, 100.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("fd_table residual diagnostic for the Liouville pair") {
  // g1 = g2 = lambda, h = (0,1), fit at t = 0 with fhat near 0: the
  // diagnostic is then essentially the loglog-average of |f_d(1)|, which
  // shrinks with the scale
  std::vector<double> divisors;
  for (double d = 1.0; d <= 64.0; d *= 2.0) divisors.push_back(d);
  FdTable t6 = fd_table({FunctionSpec::liouville(), FunctionSpec::liouville()}, {0, 1},
                        divisors, {1}, 1e6, 0.0);
  MESSAGE("lambda-pair fd residual at 1e6: ", t6.diag[0].residual,
          "  |fhat| = ", std::abs(t6.diag[0].fhat));
  CHECK(std::abs(t6.diag[0].fhat) < 0.02);
  CHECK(t6.diag[0].residual < 0.02);
  FdTable t4 = fd_table({FunctionSpec::liouville(), FunctionSpec::liouville()}, {0, 1},
                        divisors, {1}, 1e4, 0.0);
  CHECK(t6.diag[0].residual < t4.diag[0].residual);  // shrinking with X
}

TEST_CASE("archimedean isotopy residual") {
  // g = 1, t = 0: residual identically 0
  {
    CorrelationQuery q;
    q.functions = {FunctionSpec::one()};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(100.0, 2.0, 6);
    auto r = archimedean_isotopy_residual(q, 2.0, 0.0);
    for (double v : r.residuals) REQUIRE(v == doctest::Approx(0.0));
    CHECK(r.fraction_exceeding(1e-9) == 0.0);
  }

  // k=1 archimedean(t0), q=2, t=t0: residual <= C/X per scale (closed form)
  {
    const double t0 = 1.5;
    CorrelationQuery q;
    q.functions = {FunctionSpec::archimedean(t0)};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(1000.0, 2.0, 8);
    auto r = archimedean_isotopy_residual(q, 2.0, t0);
    for (size_t j = 0; j < r.scales.size(); ++j)
      REQUIRE(r.residuals[j] <= 10.0 / r.scales[j]);
  }

  CHECK_THROWS_AS(
      [] {
        CorrelationQuery q;
        q.functions = {FunctionSpec::one()};
        q.shifts = {0};
        q.grid = ScaleGrid::geometric(100.0, 2.0, 3);
        archimedean_isotopy_residual(q, -1.0, 0.0);
      }(),
      std::invalid_argument);
}

TEST_CASE("non-archimedean isotopy residual") {
  // a = 0 with an even character: S- = S+ and chi(-1) = 1, residual 0
  {
    CorrelationQuery q;
    q.functions = {FunctionSpec::liouville(), FunctionSpec::liouville()};
    q.shifts = {0, 1};
    q.dilation = 0;
    q.grid = ScaleGrid::geometric(100.0, 2.0, 5);
    auto chars = DirichletCharacter::enumerate(5);
    // chars[?] even non-principal: find one
    for (const auto& chi : chars) {
      if (chi.parity() == 1) {
        auto r = nonarch_isotopy_residual(q, chi);
        for (double v : r.residuals) REQUIRE(v == doctest::Approx(0.0));
      }
    }
  }

  // principal chi mod 1: residual equals |S_-(X) - S_+(X)|
  {
    CorrelationQuery q;
    q.functions = {FunctionSpec::liouville(), FunctionSpec::liouville()};
    q.shifts = {0, 1};
    q.grid = ScaleGrid::geometric(10000.0, 2.0, 3);
    auto chi1 = DirichletCharacter::enumerate(1)[0];
    auto r = nonarch_isotopy_residual(q, chi1);
    CorrelationQuery neg = q;
    neg.dilation = -1;
    auto sp = correlate(q);
    auto sm = correlate(neg);
    for (size_t j = 0; j < r.residuals.size(); ++j)
      REQUIRE(r.residuals[j] == doctest::Approx(std::abs(sm.values[j] - sp.values[j])));
  }
}

TEST_CASE("argument equidistribution statistic") {
  // radial mollifier: psi = psibar, statistic exactly 0
  {
    Mollifier psi;
    psi.harmonic = 0;
    psi.r0 = 0.05;
    psi.radial = [](double r) { return r * r; };
    CorrelationQuery q;
    q.functions = {FunctionSpec::archimedean(2.0)};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(100.0, 2.0, 4);
    auto es = argument_equidistribution(q, psi, q.grid, true);
    for (auto v : es.stat) REQUIRE(std::abs(v) == doctest::Approx(0.0));
  }

  // S(X) = 1 identically (all g = 1): statistic is the constant psi(1)
  {
    Mollifier psi;
    psi.harmonic = 1;
    psi.r0 = 0.5;
    psi.radial = [](double r) { return r > 0.5 ? 1.0 : 0.0; };
    CorrelationQuery q;
    q.functions = {FunctionSpec::one()};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(50.0, 2.0, 4);
    auto es = argument_equidistribution(q, psi, q.grid, true);
    // S == 1 so psi(S) = 1 * e^{i*0} = 1 and psibar = 0
    for (auto v : es.stat) REQUIRE(std::abs(v - complex<double>{1, 0}) < 1e-12);
  }

  // archimedean t0 != 0: the statistic obeys the C/log X0 decay law this S
  // exhibits (measured C in [0.8, 1.6] across 1e3..1e6 by an independent
  // prefix-sum oracle; the plain magnitudes oscillate, so the envelope is
  // the robust statement of the o(1) trend)
  {
    const double t0 = 2.0;
    Mollifier psi;
    psi.harmonic = 1;
    psi.r0 = 1.0 / (2.0 * std::abs(complex<double>{1.0, t0}));
    psi.radial = [](double) { return 1.0; };
    CorrelationQuery q;
    q.functions = {FunctionSpec::archimedean(t0)};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(1000.0, 10.0, 3);  // cutoffs 1e3, 1e4, 1e5
    auto es = argument_equidistribution(q, psi, q.grid, true);
    MESSAGE("equidist stats: ", std::abs(es.stat[0]), " ", std::abs(es.stat[1]), " ",
            std::abs(es.stat[2]));
    for (size_t j = 0; j < es.cutoffs.size(); ++j)
      REQUIRE(std::abs(es.stat[j]) <= 2.5 / std::log(es.cutoffs[j]));
    // frozen oracle anchor at X0 = 1e5 (independent prefix-sum computation)
    CHECK(std::abs(es.stat[2]) == doctest::Approx(0.13351).epsilon(1e-3));
    // subsampled mode agrees in magnitude trend and is labelled
    auto sub = argument_equidistribution(q, psi, q.grid, false);
    CHECK(!sub.exact_all_scales);
  }

  // r0 <= 0 rejected
  {
    Mollifier bad;
    bad.r0 = 0.0;
    bad.radial = [](double) { return 1.0; };
    CorrelationQuery q;
    q.functions = {FunctionSpec::one()};
    q.shifts = {0};
    q.grid = ScaleGrid::geometric(50.0, 2.0, 2);
    CHECK_THROWS_AS(argument_equidistribution(q, bad, q.grid, true), std::invalid_argument);
  }
}

TEST_CASE("three-point windowed correlations") {
  // g = 1: magnitude 1 (pretentious case, reported not asserted small)
  {
    auto rows = three_point_bound_check(FunctionSpec::one(), 0, 1, 2, {{1000.0, 10.0}});
    CHECK(rows[0].magnitude == doctest::Approx(1.0));
  }

  // lambda_3 with AP shifts at a small window, against the brute oracle
  {
    auto rows = three_point_bound_check(FunctionSpec::lambda_q(3), 0, 1, 2, {{5000.0, 10.0}});
    // direct log-weighted window sum
    PrimeTable base = PrimeTable::upto(100);
    FactorBlock blk = FactorBlock::sieve(1, 5100, base, 6000);
    Evaluator ev(FunctionSpec::lambda_q(3));
    complex<double> num = 0;
    double den = 0;
    for (uint64_t n = 501; n <= 5000; ++n) {
      num += (ev(blk, n) * ev(blk, n + 1) * ev(blk, n + 2)) / double(n);
      den += 1.0 / double(n);
    }
    CHECK(std::abs(rows[0].value - num / den) < 1e-12);
  }

  CHECK_THROWS_AS(three_point_bound_check(FunctionSpec::liouville(), 0, 0, 1, {{100.0, 5.0}}),
                  std::invalid_argument);
}

TEST_CASE("mobius variants of the two-point correlation decay too") {
  // the binary result survives replacing copies of lambda with mu
  for (auto fns : {std::vector<FunctionSpec>{FunctionSpec::moebius(), FunctionSpec::moebius()},
                   std::vector<FunctionSpec>{FunctionSpec::moebius(), FunctionSpec::liouville()}}) {
    CorrelationQuery q;
    q.functions = fns;
    q.shifts = {0, 1};
    q.grid = ScaleGrid::geometric(1e6, 2.0, 1);
    auto s = correlate(q);
    CHECK(std::abs(s.values[0]) < 0.01);
  }
}

TEST_CASE("real three-point case at non-progression shifts stays under 1/sqrt(2)") {
  auto rows = three_point_bound_check(FunctionSpec::liouville(), 0, 1, 3, {{100000.0, 100.0}});
  MESSAGE("lambda (0,1,3) windowed log magnitude at 1e5: ", rows[0].magnitude);
  CHECK(rows[0].magnitude <= 1.0 / std::sqrt(2.0) + 0.02);
}

TEST_CASE("query validation") {
  CorrelationQuery q;
  q.grid = ScaleGrid::geometric(10.0, 2.0, 2);
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);  // no functions
  q.functions = {FunctionSpec::liouville()};
  q.shifts = {0, 1};
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);  // size mismatch
  q.shifts = {1 << 30};
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);  // shift cap
}
