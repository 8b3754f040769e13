#pragma once

#include <complex>

namespace chowla {

// Neumaier-compensated summation.  merge() folds another partial sum in while
// keeping both error terms, so splitting a range into sub-sums and merging in
// a fixed order reproduces the one-pass result to ~1e-16 relative.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  void merge(const CompensatedSum& o) {
    add(o.sum);
    comp += o.comp;
  }

  void subtract(const CompensatedSum& o) {
    add(-o.sum);
    comp -= o.comp;
  }

  double value() const { return sum + comp; }
};

struct ComplexSum {
  CompensatedSum re, im;

  void add(std::complex<double> z) {
    re.add(z.real());
    im.add(z.imag());
  }

  void merge(const ComplexSum& o) {
    re.merge(o.re);
    im.merge(o.im);
  }

  void subtract(const ComplexSum& o) {
    re.subtract(o.re);
    im.subtract(o.im);
  }

  std::complex<double> value() const { return {re.value(), im.value()}; }
};

}  // namespace chowla
