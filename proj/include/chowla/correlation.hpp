#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "chowla/averaging.hpp"
#include "chowla/mult_functions.hpp"
#include "chowla/sweep.hpp"

namespace chowla {

// S(X) = E^{scheme}_{n <= X/d}  g_1(n + a*h_1) ... g_k(n + a*h_k),
// with the convention that a factor whose argument is <= 0 contributes 0.
struct CorrelationQuery {
  std::vector<FunctionSpec> functions;
  std::vector<int64_t> shifts;
  int64_t dilation = 1;  // a
  double divisor = 1.0;  // d
  WeightScheme scheme = WeightScheme::Unweighted;
  ScaleGrid grid;

  void validate() const;
  uint64_t max_shift_magnitude() const;
};

struct CorrelationSeries {
  std::vector<double> scales;
  std::vector<std::complex<double>> values;
  std::vector<uint64_t> counts;
  std::vector<double> dens;
};

// raw accumulator state at a checkpoint, for window differences
struct CheckpointSnapshot {
  double scale = 0;
  WeightedAccumulator acc;
};

CorrelationSeries correlate(const CorrelationQuery& q, const SweepOptions& opt = {});

// same engine, but at an explicit ascending list of scales; returns raw
// accumulator snapshots (num/den/count) per scale
std::vector<CheckpointSnapshot> correlate_at(const CorrelationQuery& q,
                                             const std::vector<double>& scales,
                                             const SweepOptions& opt = {});

// Two-phase form: several jobs can register their consumers with one shared
// sweep, then read snapshots afterwards.
class CorrelationJob {
 public:
  CorrelationJob(const CorrelationQuery& q, std::vector<double> checkpoint_scales);
  ~CorrelationJob();
  CorrelationJob(CorrelationJob&&) noexcept;
  BlockConsumer& consumer();
  std::vector<CheckpointSnapshot> snapshots() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// f_d(a) tables (finite-scale proxies of the correlation sequences)

struct FdTable {
  std::vector<double> divisors;
  std::vector<int64_t> a_values;
  double X = 0;
  // fda[ai][di] = E_{n <= X/d} prod g_i(n + a*h_i)
  std::vector<std::vector<std::complex<double>>> fda;
  // per a: weighted least-squares fit fhat(a) minimizing the loglog-weighted
  // residual |f_d(a) - fhat(a) d^{-it}|, and that residual average
  struct Diag {
    std::complex<double> fhat;
    double residual = 0;
  };
  std::vector<Diag> diag;
  double t_candidate = 0;
};

FdTable fd_table(const std::vector<FunctionSpec>& functions, const std::vector<int64_t>& shifts,
                 const std::vector<double>& divisors, const std::vector<int64_t>& a_values,
                 double X, double t_candidate, const SweepOptions& opt = {});

// ---------------------------------------------------------------------------
// isotopy residuals

struct ResidualSeries {
  std::vector<double> scales;
  std::vector<double> residuals;
  // fraction of grid scales whose residual exceeds eps
  double fraction_exceeding(double eps) const;
};

// |S(X) - q^{it} S(X/q)| per grid scale
ResidualSeries archimedean_isotopy_residual(const CorrelationQuery& query, double q_ratio,
                                            double t, const SweepOptions& opt = {});

// |S_-(X) - chi(-1) S_+(X)| per grid scale, S_- evaluated at negated shifts
ResidualSeries nonarch_isotopy_residual(const CorrelationQuery& query,
                                        const DirichletCharacter& chi,
                                        const SweepOptions& opt = {});

// ---------------------------------------------------------------------------
// equidistribution of the argument of S(X)

// psi(z) = Psi(|z|) e^{i k arg z} with Psi vanishing on [0, r0], or an
// arbitrary tabulated psi; the rotational average uses angular quadrature
// (256 points by default).
struct Mollifier {
  std::function<double(double)> radial;  // Psi
  int harmonic = 1;                      // k
  double r0 = 0.1;                       // psi vanishes on |z| <= r0
  int quadrature_order = 256;
  // optional general form; overrides radial/harmonic when set
  std::function<std::complex<double>(std::complex<double>)> tabulated;

  std::complex<double> psi(std::complex<double> z) const;
  std::complex<double> rotational_average(std::complex<double> z) const;
  void validate() const;
};

struct EquidistributionSeries {
  std::vector<double> cutoffs;               // X0 grid
  std::vector<std::complex<double>> stat;    // E^log_{X <= X0} [psi(S(X)) - psibar(S(X))]
  bool exact_all_scales = true;              // false when subsampled
};

// exact mode evaluates S(X) at every integer scale X <= X0 (one pass);
// subsampled mode only at the geometric grid scales, and is labelled as such
EquidistributionSeries argument_equidistribution(const CorrelationQuery& query,
                                                 const Mollifier& psi, const ScaleGrid& cutoffs,
                                                 bool exact_all_scales = true,
                                                 const SweepOptions& opt = {});

class EquidistJob {
 public:
  EquidistJob(const CorrelationQuery& query, const Mollifier& psi, const ScaleGrid& cutoffs);
  ~EquidistJob();
  EquidistJob(EquidistJob&&) noexcept;
  BlockConsumer& consumer();
  EquidistributionSeries result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// windowed three-point correlations against the 1/sqrt(2) envelope

struct ThreePointWindow {
  double x = 0;
  double omega = 0;
  std::complex<double> value;
  double magnitude = 0;
};

std::vector<ThreePointWindow> three_point_bound_check(
    const FunctionSpec& g, int64_t h1, int64_t h2, int64_t h3,
    const std::vector<std::pair<double, double>>& windows, const SweepOptions& opt = {});

}  // namespace chowla
