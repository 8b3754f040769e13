#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chowla/kahan.hpp"

namespace chowla {

// The four averaging operators: E, E^log, E^loglog over n, and the prime
// averages E_p, E^log_p.  Weight conventions: 1, 1/n, 1/(n*log(1+n)).
enum class WeightScheme { Unweighted, Log, LogLog, PrimeUnweighted, PrimeLog };

const char* scheme_name(WeightScheme s);
WeightScheme scheme_from_name(const std::string& name);

inline bool prime_only(WeightScheme s) {
  return s == WeightScheme::PrimeUnweighted || s == WeightScheme::PrimeLog;
}

inline double scheme_weight(WeightScheme s, uint64_t n) {
  switch (s) {
    case WeightScheme::Unweighted:
    case WeightScheme::PrimeUnweighted:
      return 1.0;
    case WeightScheme::Log:
    case WeightScheme::PrimeLog:
      return 1.0 / static_cast<double>(n);
    case WeightScheme::LogLog:
      return 1.0 / (static_cast<double>(n) * std::log1p(static_cast<double>(n)));
  }
  return 0.0;
}

struct EmptyAverage : std::runtime_error {
  EmptyAverage() : std::runtime_error("average over an empty index set") {}
};

// Streaming, mergeable partial sum for one scheme.  Merging accumulators
// over disjoint ranges reproduces the one-pass union to ~1e-12 relative;
// merge order must be fixed by the caller for bit-identical reruns.
class WeightedAccumulator {
 public:
  WeightedAccumulator() = default;
  explicit WeightedAccumulator(WeightScheme s) : scheme_(s) {}

  WeightScheme scheme() const { return scheme_; }

  void add(uint64_t n, std::complex<double> f) {
    double w = scheme_weight(scheme_, n);
    num_.add(w * f);
    den_.add(w);
    ++count_;
  }

  void merge(const WeightedAccumulator& o) {
    num_.merge(o.num_);
    den_.merge(o.den_);
    count_ += o.count_;
  }

  // window difference: *this minus an earlier snapshot of the same stream
  WeightedAccumulator minus(const WeightedAccumulator& earlier) const {
    WeightedAccumulator r = *this;
    r.num_.subtract(earlier.num_);
    r.den_.subtract(earlier.den_);
    r.count_ -= earlier.count_;
    return r;
  }

  std::complex<double> value() const {
    if (count_ == 0) throw EmptyAverage();
    return num_.value() / den_.value();
  }

  uint64_t count() const { return count_; }
  double den() const { return den_.value(); }
  std::complex<double> num() const { return num_.value(); }

 private:
  WeightScheme scheme_ = WeightScheme::Unweighted;
  ComplexSum num_;
  CompensatedSum den_;
  uint64_t count_ = 0;
};

// Geometric grid of scales X_j = x0 * ratio^j, j = 0..count-1.
struct ScaleGrid {
  double x0 = 10.0;
  double ratio = 1.189207115002721;  // 2^(1/4)
  int count = 1;

  static ScaleGrid geometric(double x0, double ratio, int count);
  // grid from x0 up to (at least) x_max with the given ratio
  static ScaleGrid up_to(double x0, double x_max, double ratio = 1.189207115002721);

  double scale(int j) const { return x0 * std::pow(ratio, j); }
  double max() const { return scale(count - 1); }
  std::vector<double> scales() const;
  void validate() const;
};

struct SeriesPoint {
  double scale = 0;
  std::complex<double> value;
  uint64_t count = 0;
  double den = 0;
};

// E^{scheme}_{n <= X} f(n); prime schemes restrict the index set to primes.
// f is called for every index in ascending order.
template <typename F>
std::complex<double> average_over(F&& f, WeightScheme scheme, double X);

// One-pass multi-scale averaging of f over a grid.
template <typename F>
std::vector<SeriesPoint> snapshot_series(F&& f, WeightScheme scheme, const ScaleGrid& grid);

// Logarithmic density estimates of a sorted member list at each grid scale.
template <typename It>
std::vector<SeriesPoint> logarithmic_density(It first, It last, const ScaleGrid& grid);

struct AverageComparison {
  std::complex<double> loglog_integers;  // E^{loglog}_{d <= X} f(d)
  std::complex<double> log_primes;       // E^{log}_{p <= X} f(ap)
  double gap = 0;
};

// Both sides of the integers-vs-primes comparison for a bounded
// log-Lipschitz f; the gap is reported, not asserted, at finite X.
template <typename F>
AverageComparison compare_integer_prime_averages(F&& f, uint64_t a, double X);

}  // namespace chowla

#include "chowla/averaging_impl.hpp"
