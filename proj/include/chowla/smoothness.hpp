#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "chowla/averaging.hpp"
#include "chowla/sweep.hpp"

namespace chowla {

// Dickman's function: rho = 1 on [0,1], u rho'(u) = -rho(u-1).  Solved in
// the integral form rho(u) = rho(u0) - int_{u0}^{u} rho(s-1)/s ds, marched
// with Simpson steps; the delayed value at half-steps is interpolated with a
// cubic stencil kept inside one smooth piece [m, m+1] (rho' jumps at u = 1).
class DickmanSolver {
 public:
  explicit DickmanSolver(double u_max = 20.0, double step = 1e-3);

  double rho(double u) const;
  double u_max() const { return u_max_; }
  double step() const { return step_; }

  // max |u rho'(u) + rho(u-1)| over interior grid nodes of [lo, hi],
  // rho' by central differences; nodes at the u = 1 kink are skipped
  double max_dde_residual(double lo = 1.0, double hi = 10.0) const;

 private:
  double value_at_node(int64_t i) const { return table_[static_cast<size_t>(i)]; }
  double interp(double u) const;  // piecewise-aware cubic

  double u_max_;
  double step_;
  int64_t per_unit_;  // nodes per unit interval (step = 1/per_unit)
  std::vector<double> table_;
};

// process-wide solver with the default tableau
const DickmanSolver& default_dickman();
double dickman_rho(double u);

// E_{n <= X} 1_{P+(n) < P+(n+1)} per grid scale.
struct RaceSeries {
  std::vector<double> scales;
  std::vector<double> freq;
  std::vector<uint64_t> counts;
};
RaceSeries lpf_race(const ScaleGrid& grid, const SweepOptions& opt = {});

class RaceJob {
 public:
  explicit RaceJob(const ScaleGrid& grid);
  ~RaceJob();
  RaceJob(RaceJob&&) noexcept;
  BlockConsumer& consumer();
  RaceSeries result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Exact rational exponent for the smoothness indicator P+(n) < n^(num/den);
// compared in integers (128-bit) where possible, else carefully in floats.
struct RationalExponent {
  uint64_t num = 1;
  uint64_t den = 2;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
bool lpf_below_power(uint64_t pplus, uint64_t n, RationalExponent alpha);

// E_{n <= X} 1_{P+(n) < n^alpha} 1_{P+(n+1) < n^beta} with the Dickman
// target rho(1/alpha) rho(1/beta).  Two cutoff variants of the indicator
// are reported alongside: the X^alpha threshold over all n <= X, and the
// same threshold restricted to the window X/log X <= n <= X (that window
// is where the cutoff approximates the exact indicator; it converges to
// the target markedly faster than the full-range exact version, whose gap
// decays only like c/log X).
struct SmoothSeries {
  std::vector<double> scales;
  std::vector<double> empirical;           // exact n^alpha version, n <= X
  std::vector<double> empirical_cutoff;    // X^alpha version, n <= X
  std::vector<double> empirical_windowed;  // X^alpha version, X/log X <= n <= X
  double target = 0;
  std::vector<double> gap;                 // empirical - target
};
SmoothSeries joint_smooth_density(RationalExponent alpha, RationalExponent beta,
                                  const ScaleGrid& grid, const SweepOptions& opt = {});

class SmoothJob {
 public:
  SmoothJob(RationalExponent alpha, RationalExponent beta, const ScaleGrid& grid);
  ~SmoothJob();
  SmoothJob(SmoothJob&&) noexcept;
  BlockConsumer& consumer();
  SmoothSeries result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chowla
