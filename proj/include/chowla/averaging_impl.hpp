#pragma once

#include <algorithm>
#include <cmath>

#include "chowla/factor_sieve.hpp"

namespace chowla {

template <typename F>
std::complex<double> average_over(F&& f, WeightScheme scheme, double X) {
  if (X < 1) throw std::invalid_argument("average: X >= 1 required");
  WeightedAccumulator acc(scheme);
  uint64_t N = static_cast<uint64_t>(X);
  if (prime_only(scheme)) {
    if (N >= 2)
      for_primes(2, N + 1, [&](uint64_t p) { acc.add(p, f(p)); });
  } else {
    for (uint64_t n = 1; n <= N; ++n) acc.add(n, f(n));
  }
  return acc.value();
}

template <typename F>
std::vector<SeriesPoint> snapshot_series(F&& f, WeightScheme scheme, const ScaleGrid& grid) {
  grid.validate();
  std::vector<SeriesPoint> out;
  out.reserve(grid.count);
  WeightedAccumulator acc(scheme);
  uint64_t n = prime_only(scheme) ? 2 : 1;
  uint64_t n_max = static_cast<uint64_t>(grid.max());
  std::vector<uint64_t> primes;
  size_t pi = 0;
  if (prime_only(scheme)) primes = primes_in(2, n_max + 1);
  for (int j = 0; j < grid.count; ++j) {
    uint64_t bound = static_cast<uint64_t>(grid.scale(j));
    if (prime_only(scheme)) {
      while (pi < primes.size() && primes[pi] <= bound) {
        acc.add(primes[pi], f(primes[pi]));
        ++pi;
      }
    } else {
      for (; n <= bound; ++n) acc.add(n, f(n));
    }
    SeriesPoint pt;
    pt.scale = grid.scale(j);
    pt.value = acc.count() ? acc.value() : std::complex<double>{0, 0};
    pt.count = acc.count();
    pt.den = acc.den();
    out.push_back(pt);
  }
  return out;
}

template <typename It>
std::vector<SeriesPoint> logarithmic_density(It first, It last, const ScaleGrid& grid) {
  grid.validate();
  std::vector<SeriesPoint> out;
  out.reserve(grid.count);
  CompensatedSum member_weight;
  CompensatedSum total_weight;
  uint64_t member_count = 0;
  uint64_t n = 1;
  uint64_t prev = 0;
  It it = first;
  for (int j = 0; j < grid.count; ++j) {
    uint64_t bound = static_cast<uint64_t>(grid.scale(j));
    for (; n <= bound; ++n) total_weight.add(1.0 / static_cast<double>(n));
    while (it != last && *it <= bound) {
      uint64_t m = *it;
      if (m < 1 || m < prev) throw std::invalid_argument("logarithmic_density: unsorted stream");
      prev = m;
      member_weight.add(1.0 / static_cast<double>(m));
      ++member_count;
      ++it;
    }
    SeriesPoint pt;
    pt.scale = grid.scale(j);
    pt.value = member_weight.value() / total_weight.value();
    pt.count = member_count;
    pt.den = total_weight.value();
    out.push_back(pt);
  }
  return out;
}

template <typename F>
AverageComparison compare_integer_prime_averages(F&& f, uint64_t a, double X) {
  if (X < 10) throw std::invalid_argument("compare averages: X >= 10 required");
  if (a < 1) throw std::invalid_argument("compare averages: a >= 1 required");
  AverageComparison r;
  WeightedAccumulator ints(WeightScheme::LogLog);
  uint64_t N = static_cast<uint64_t>(X);
  for (uint64_t d = 1; d <= N; ++d) {
    std::complex<double> v = f(d);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::domain_error("compare averages: non-finite f value");
    ints.add(d, v);
  }
  WeightedAccumulator prim(WeightScheme::PrimeLog);
  for_primes(2, N + 1, [&](uint64_t p) { prim.add(p, f(a * p)); });
  r.loglog_integers = ints.value();
  r.log_primes = prim.value();
  r.gap = std::abs(r.loglog_integers - r.log_primes);
  return r;
}

}  // namespace chowla
