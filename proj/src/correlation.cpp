#include "chowla/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chowla {

void CorrelationQuery::validate() const {
  if (functions.empty()) throw std::invalid_argument("correlation query: k >= 1 required");
  if (functions.size() != shifts.size())
    throw std::invalid_argument("correlation query: one shift per function required");
  if (!(divisor > 0)) throw std::invalid_argument("correlation query: d > 0 required");
  grid.validate();
  if (max_shift_magnitude() > (uint64_t{1} << 20))
    throw std::invalid_argument("correlation query: |a*h| exceeds the shift cap 2^20");
}

uint64_t CorrelationQuery::max_shift_magnitude() const {
  uint64_t m = 0;
  for (int64_t h : shifts) {
    long double v = fabsl(static_cast<long double>(h) * static_cast<long double>(dilation));
    m = std::max<uint64_t>(m, static_cast<uint64_t>(v));
  }
  return m;
}

namespace {

// shared map step: product of the shifted factor values at one n
struct ProductKernel {
  std::vector<Evaluator> evals;
  std::vector<int64_t> offs;  // a*h_i

  ProductKernel(const std::vector<FunctionSpec>& fns, const std::vector<int64_t>& shifts,
                int64_t a) {
    evals.reserve(fns.size());
    for (const auto& f : fns) evals.emplace_back(f);
    offs.reserve(shifts.size());
    for (int64_t h : shifts) offs.push_back(a * h);
  }

  std::complex<double> operator()(const FactorBlock& blk, uint64_t n) const {
    std::complex<double> v = 1.0;
    for (size_t i = 0; i < evals.size(); ++i) {
      int64_t m = static_cast<int64_t>(n) + offs[i];
      if (m <= 0) return 0.0;  // g(m) = 0 for m <= 0
      v *= evals[i](blk, m);
      if (v == std::complex<double>{0.0, 0.0}) return v;
    }
    return v;
  }
};

// accumulates one weighted product stream with snapshots at given n-bounds
class SeriesConsumer : public BlockConsumer {
 public:
  SeriesConsumer(const std::vector<FunctionSpec>& fns, const std::vector<int64_t>& shifts,
                 int64_t a, WeightScheme scheme, std::vector<uint64_t> bounds)
      : kernel_(fns, shifts, a),
        scheme_(scheme),
        bounds_(std::move(bounds)),
        running_(scheme) {
    for (size_t i = 0; i < kernel_.offs.size(); ++i)
      margin_ = std::max<uint64_t>(margin_, static_cast<uint64_t>(std::llabs(kernel_.offs[i])));
    snapshots_.resize(bounds_.size());
  }

  uint64_t limit() const override { return bounds_.empty() ? 0 : bounds_.back(); }
  uint64_t margin() const override { return margin_; }

  struct Partial : BlockPartial {
    // accumulator over the whole core range, plus states at interior bounds
    WeightedAccumulator total;
    std::vector<std::pair<size_t, WeightedAccumulator>> at_bounds;
    explicit Partial(WeightScheme s) : total(s) {}
  };

  std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                        uint64_t core_hi) override {
    auto part = std::make_unique<Partial>(scheme_);
    size_t bi = std::lower_bound(bounds_.begin(), bounds_.end(), core_lo) - bounds_.begin();
    const bool primes = prime_only(scheme_);
    for (uint64_t n = core_lo; n < core_hi; ++n) {
      while (bi < bounds_.size() && bounds_[bi] < n) {
        part->at_bounds.emplace_back(bi, part->total);
        ++bi;
      }
      if (primes && !blk.is_prime(n)) continue;
      std::complex<double> v = kernel_(blk, n);
      part->total.add(n, v);
    }
    while (bi < bounds_.size() && bounds_[bi] < core_hi) {
      part->at_bounds.emplace_back(bi, part->total);
      ++bi;
    }
    return part;
  }

  void absorb(std::unique_ptr<BlockPartial> partial) override {
    auto* p = static_cast<Partial*>(partial.get());
    for (auto& [bi, acc] : p->at_bounds) {
      WeightedAccumulator snap = running_;
      snap.merge(acc);
      snapshots_[bi] = snap;
    }
    running_.merge(p->total);
  }

  // snapshot of the accumulator at n <= bounds_[j]
  const WeightedAccumulator& snapshot(size_t j) const { return snapshots_[j]; }

 private:
  ProductKernel kernel_;
  WeightScheme scheme_;
  std::vector<uint64_t> bounds_;
  uint64_t margin_ = 0;
  WeightedAccumulator running_;
  std::vector<WeightedAccumulator> snapshots_;
};

std::vector<uint64_t> scale_bounds(const std::vector<double>& scales, double divisor) {
  std::vector<uint64_t> bounds;
  bounds.reserve(scales.size());
  for (double X : scales) {
    double y = X / divisor;
    bounds.push_back(y >= 1.0 ? static_cast<uint64_t>(y) : 0);
  }
  if (!std::is_sorted(bounds.begin(), bounds.end()))
    throw std::invalid_argument("correlate: scales must ascend");
  return bounds;
}

}  // namespace

struct CorrelationJob::Impl {
  std::vector<double> scales;
  SeriesConsumer consumer;
  Impl(const CorrelationQuery& q, std::vector<double> sc)
      : scales(std::move(sc)),
        consumer(q.functions, q.shifts, q.dilation, q.scheme, scale_bounds(scales, q.divisor)) {}
};

CorrelationJob::CorrelationJob(const CorrelationQuery& q, std::vector<double> checkpoint_scales) {
  if (q.functions.empty() || q.functions.size() != q.shifts.size())
    throw std::invalid_argument("correlate: bad query");
  impl_ = std::make_unique<Impl>(q, std::move(checkpoint_scales));
}

CorrelationJob::~CorrelationJob() = default;
CorrelationJob::CorrelationJob(CorrelationJob&&) noexcept = default;

BlockConsumer& CorrelationJob::consumer() { return impl_->consumer; }

std::vector<CheckpointSnapshot> CorrelationJob::snapshots() const {
  std::vector<CheckpointSnapshot> out(impl_->scales.size());
  for (size_t j = 0; j < impl_->scales.size(); ++j) {
    out[j].scale = impl_->scales[j];
    out[j].acc = impl_->consumer.snapshot(j);
  }
  return out;
}

CorrelationSeries correlate(const CorrelationQuery& q, const SweepOptions& opt) {
  q.validate();
  std::vector<double> scales = q.grid.scales();
  std::vector<CheckpointSnapshot> snaps = correlate_at(q, scales, opt);
  CorrelationSeries out;
  out.scales = scales;
  for (const auto& s : snaps) {
    out.values.push_back(s.acc.count() ? s.acc.value() : std::complex<double>{0, 0});
    out.counts.push_back(s.acc.count());
    out.dens.push_back(s.acc.den());
  }
  return out;
}

std::vector<CheckpointSnapshot> correlate_at(const CorrelationQuery& q,
                                             const std::vector<double>& scales,
                                             const SweepOptions& opt) {
  CorrelationJob job(q, scales);
  std::vector<BlockConsumer*> cs{&job.consumer()};
  SweepReport rep = run_sweep(cs, opt);
  if (!rep.consumer_errors[0].empty()) throw std::runtime_error(rep.consumer_errors[0]);
  return job.snapshots();
}

// ---------------------------------------------------------------------------

FdTable fd_table(const std::vector<FunctionSpec>& functions, const std::vector<int64_t>& shifts,
                 const std::vector<double>& divisors, const std::vector<int64_t>& a_values,
                 double X, double t_candidate, const SweepOptions& opt) {
  if (divisors.empty() || a_values.empty())
    throw std::invalid_argument("fd_table: empty divisor or a list");
  for (double d : divisors)
    if (!(d > 0) || X / d < 1) throw std::invalid_argument("fd_table: need X/d >= 1");

  FdTable table;
  table.divisors = divisors;
  table.a_values = a_values;
  table.X = X;
  table.t_candidate = t_candidate;

  // per a: one streaming pass with snapshots at every floor(X/d)
  std::vector<double> sorted_d = divisors;
  std::sort(sorted_d.begin(), sorted_d.end(), std::greater<double>());  // ascending bounds
  std::vector<double> pseudo_scales(sorted_d.size());
  for (size_t i = 0; i < sorted_d.size(); ++i) pseudo_scales[i] = X / sorted_d[i];

  std::vector<std::unique_ptr<SeriesConsumer>> consumers;
  std::vector<BlockConsumer*> ptrs;
  std::vector<uint64_t> bounds;
  bounds.reserve(pseudo_scales.size());
  for (double y : pseudo_scales) bounds.push_back(y >= 1 ? static_cast<uint64_t>(y) : 0);
  for (int64_t a : a_values) {
    consumers.push_back(std::make_unique<SeriesConsumer>(functions, shifts, a,
                                                         WeightScheme::Unweighted, bounds));
    ptrs.push_back(consumers.back().get());
  }
  SweepReport rep = run_sweep(ptrs, opt);
  for (const auto& e : rep.consumer_errors)
    if (!e.empty()) throw std::runtime_error(e);

  table.fda.assign(a_values.size(), std::vector<std::complex<double>>(divisors.size()));
  for (size_t ai = 0; ai < a_values.size(); ++ai) {
    for (size_t di = 0; di < divisors.size(); ++di) {
      // map divisor back to its ascending-bound position
      size_t pos = std::find(sorted_d.begin(), sorted_d.end(), divisors[di]) - sorted_d.begin();
      const WeightedAccumulator& acc = consumers[ai]->snapshot(pos);
      table.fda[ai][di] = acc.count() ? acc.value() : std::complex<double>{0, 0};
    }
  }

  // loglog-weighted least squares: fhat = sum_d w_d f_d(a) d^{it} / sum_d w_d
  table.diag.resize(a_values.size());
  for (size_t ai = 0; ai < a_values.size(); ++ai) {
    double wsum = 0;
    std::complex<double> acc = 0;
    for (size_t di = 0; di < divisors.size(); ++di) {
      double d = divisors[di];
      double w = 1.0 / (d * std::log1p(d));
      std::complex<double> rot{std::cos(t_candidate * std::log(d)),
                               std::sin(t_candidate * std::log(d))};
      acc += w * table.fda[ai][di] * rot;
      wsum += w;
    }
    std::complex<double> fhat = acc / wsum;
    double res = 0;
    for (size_t di = 0; di < divisors.size(); ++di) {
      double d = divisors[di];
      double w = 1.0 / (d * std::log1p(d));
      std::complex<double> pred =
          fhat * std::complex<double>{std::cos(-t_candidate * std::log(d)),
                                      std::sin(-t_candidate * std::log(d))};
      res += w * std::abs(table.fda[ai][di] - pred);
    }
    table.diag[ai] = {fhat, res / wsum};
  }
  return table;
}

// ---------------------------------------------------------------------------

double ResidualSeries::fraction_exceeding(double eps) const {
  if (residuals.empty()) return 0;
  size_t c = 0;
  for (double r : residuals)
    if (r > eps) ++c;
  return static_cast<double>(c) / residuals.size();
}

ResidualSeries archimedean_isotopy_residual(const CorrelationQuery& query, double q_ratio,
                                            double t, const SweepOptions& opt) {
  if (!(q_ratio > 0)) throw std::invalid_argument("archimedean isotopy: q > 0 required");
  query.validate();
  std::vector<double> scales = query.grid.scales();
  for (double X : scales)
    if (X / q_ratio / query.divisor < 1)
      throw std::invalid_argument("archimedean isotopy: X/q below 1 on grid");

  // one pass with checkpoints at all X_j and X_j/q, ascending and deduped
  std::vector<double> checkpoints;
  for (double X : scales) {
    checkpoints.push_back(X);
    checkpoints.push_back(X / q_ratio);
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  std::vector<CheckpointSnapshot> snaps = correlate_at(query, checkpoints, opt);

  auto value_at = [&](double X) -> std::complex<double> {
    size_t i = std::lower_bound(checkpoints.begin(), checkpoints.end(), X) -
               checkpoints.begin();
    const auto& acc = snaps[i].acc;
    return acc.count() ? acc.value() : std::complex<double>{0, 0};
  };

  std::complex<double> twist{std::cos(t * std::log(q_ratio)), std::sin(t * std::log(q_ratio))};
  ResidualSeries out;
  out.scales = scales;
  for (double X : scales)
    out.residuals.push_back(std::abs(value_at(X) - twist * value_at(X / q_ratio)));
  return out;
}

ResidualSeries nonarch_isotopy_residual(const CorrelationQuery& query,
                                        const DirichletCharacter& chi, const SweepOptions& opt) {
  query.validate();
  CorrelationQuery neg = query;
  neg.dilation = -query.dilation;
  CorrelationSeries plus = correlate(query, opt);
  CorrelationSeries minus = correlate(neg, opt);
  double sign = chi.parity();
  ResidualSeries out;
  out.scales = plus.scales;
  for (size_t j = 0; j < plus.scales.size(); ++j)
    out.residuals.push_back(std::abs(minus.values[j] - sign * plus.values[j]));
  return out;
}

// ---------------------------------------------------------------------------

void Mollifier::validate() const {
  if (!(r0 > 0)) throw std::invalid_argument("mollifier must vanish near 0 (r0 > 0)");
  if (!radial && !tabulated) throw std::invalid_argument("mollifier: profile required");
  if (quadrature_order < 8) throw std::invalid_argument("mollifier: quadrature order too small");
}

std::complex<double> Mollifier::psi(std::complex<double> z) const {
  double r = std::abs(z);
  if (r <= r0) return 0.0;
  if (tabulated) return tabulated(z);
  double p = radial(r);
  if (harmonic == 0) return p;
  double th = std::arg(z) * harmonic;
  return p * std::complex<double>{std::cos(th), std::sin(th)};
}

std::complex<double> Mollifier::rotational_average(std::complex<double> z) const {
  double r = std::abs(z);
  if (r <= r0) return 0.0;
  if (!tabulated) {
    // the equispaced quadrature of Psi(r) e^{ik theta} is exactly Psi(r) for
    // k = 0 and exactly 0 for 0 < |k| < order, so no loop is needed
    return harmonic == 0 ? std::complex<double>{radial(r), 0} : std::complex<double>{0, 0};
  }
  std::complex<double> acc = 0;
  for (int j = 0; j < quadrature_order; ++j) {
    double th = 2.0 * M_PI * j / quadrature_order;
    acc += psi(r * std::complex<double>{std::cos(th), std::sin(th)});
  }
  return acc / static_cast<double>(quadrature_order);
}

namespace {

// exact-all-scales mode: fold S(X) for every integer X inside absorb(),
// which runs in block order on one thread; the sieve stays parallel.
class EquidistConsumer : public BlockConsumer {
 public:
  EquidistConsumer(const CorrelationQuery& q, const Mollifier& psi,
                   std::vector<uint64_t> cutoffs)
      : kernel_(q.functions, q.shifts, q.dilation),
        psi_(psi),
        cutoffs_(std::move(cutoffs)),
        divisor_(q.divisor) {
    for (int64_t o : kernel_.offs)
      margin_ = std::max<uint64_t>(margin_, static_cast<uint64_t>(std::llabs(o)));
    stats_.resize(cutoffs_.size());
  }

  uint64_t limit() const override { return cutoffs_.empty() ? 0 : cutoffs_.back(); }
  uint64_t margin() const override { return margin_; }

  struct Partial : BlockPartial {
    uint64_t lo, hi;
    std::vector<std::complex<double>> terms;  // product values for n in [lo, hi)
  };

  std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                        uint64_t core_hi) override {
    auto p = std::make_unique<Partial>();
    p->lo = core_lo;
    p->hi = core_hi;
    p->terms.resize(core_hi - core_lo);
    for (uint64_t n = core_lo; n < core_hi; ++n) p->terms[n - core_lo] = kernel_(blk, n);
    return p;
  }

  void absorb(std::unique_ptr<BlockPartial> partial) override {
    auto* p = static_cast<Partial*>(partial.get());
    // for d > 1 the n-prefix lags behind X, so terms still needed later are
    // buffered; for d = 1 the prefix keeps pace within the block
    if (divisor_ != 1.0) {
      uint64_t need = static_cast<uint64_t>(static_cast<double>(limit()) / divisor_);
      for (uint64_t n = p->lo; n < p->hi && n <= need; ++n)
        buffer_.push_back(p->terms[n - p->lo]);
    }
    for (uint64_t X = p->lo; X < p->hi; ++X) {
      // prefix over n <= floor(X/d)
      uint64_t n_bound = static_cast<uint64_t>(static_cast<double>(X) / divisor_);
      while (next_n_ <= n_bound) {
        prefix_.add(divisor_ == 1.0 ? p->terms[next_n_ - p->lo] : buffer_[next_n_ - 1]);
        ++next_n_;
        ++prefix_count_;
      }
      std::complex<double> S =
          prefix_count_ ? prefix_.value() / static_cast<double>(prefix_count_)
                        : std::complex<double>{0, 0};
      std::complex<double> term = psi_.psi(S) - psi_.rotational_average(S);
      stat_num_.add(term / static_cast<double>(X));
      stat_den_.add(1.0 / static_cast<double>(X));
      while (cut_i_ < cutoffs_.size() && cutoffs_[cut_i_] == X) {
        stats_[cut_i_] = stat_num_.value() / stat_den_.value();
        ++cut_i_;
      }
    }
  }

  std::complex<double> stat(size_t j) const { return stats_[j]; }

 private:
  ProductKernel kernel_;
  const Mollifier& psi_;
  std::vector<uint64_t> cutoffs_;
  double divisor_;
  uint64_t margin_ = 0;
  // sequential fold state
  uint64_t next_n_ = 1;
  uint64_t prefix_count_ = 0;
  ComplexSum prefix_;
  std::vector<std::complex<double>> buffer_;
  ComplexSum stat_num_;
  CompensatedSum stat_den_;
  size_t cut_i_ = 0;
  std::vector<std::complex<double>> stats_;
};

}  // namespace

struct EquidistJob::Impl {
  std::vector<double> cutoffs;
  Mollifier psi;
  EquidistConsumer consumer;
  Impl(const CorrelationQuery& q, const Mollifier& m, std::vector<double> cuts,
       std::vector<uint64_t> cut_n)
      : cutoffs(std::move(cuts)), psi(m), consumer(q, psi, std::move(cut_n)) {}
};

EquidistJob::EquidistJob(const CorrelationQuery& query, const Mollifier& psi,
                         const ScaleGrid& cutoffs) {
  query.validate();
  psi.validate();
  std::vector<double> cuts = cutoffs.scales();
  std::vector<uint64_t> cut_n;
  for (double X : cuts) cut_n.push_back(static_cast<uint64_t>(X));
  impl_ = std::make_unique<Impl>(query, psi, std::move(cuts), std::move(cut_n));
}

EquidistJob::~EquidistJob() = default;
EquidistJob::EquidistJob(EquidistJob&&) noexcept = default;

BlockConsumer& EquidistJob::consumer() { return impl_->consumer; }

EquidistributionSeries EquidistJob::result() const {
  EquidistributionSeries out;
  out.cutoffs = impl_->cutoffs;
  out.exact_all_scales = true;
  for (size_t j = 0; j < impl_->cutoffs.size(); ++j) out.stat.push_back(impl_->consumer.stat(j));
  return out;
}

EquidistributionSeries argument_equidistribution(const CorrelationQuery& query,
                                                 const Mollifier& psi, const ScaleGrid& cutoffs,
                                                 bool exact_all_scales, const SweepOptions& opt) {
  query.validate();
  psi.validate();
  EquidistributionSeries out;
  out.cutoffs = cutoffs.scales();
  out.exact_all_scales = exact_all_scales;

  if (exact_all_scales) {
    EquidistJob job(query, psi, cutoffs);
    std::vector<BlockConsumer*> cs{&job.consumer()};
    SweepReport rep = run_sweep(cs, opt);
    if (!rep.consumer_errors[0].empty()) throw std::runtime_error(rep.consumer_errors[0]);
    return job.result();
  }

  // subsampled: S only at the geometric grid scales; log weights are uniform
  // across a geometric grid, so the statistic is the running mean
  CorrelationQuery q = query;
  q.grid = cutoffs;
  CorrelationSeries S = correlate(q, opt);
  std::complex<double> acc = 0;
  for (size_t j = 0; j < S.values.size(); ++j) {
    acc += psi.psi(S.values[j]) - psi.rotational_average(S.values[j]);
    out.stat.push_back(acc / static_cast<double>(j + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ThreePointWindow> three_point_bound_check(
    const FunctionSpec& g, int64_t h1, int64_t h2, int64_t h3,
    const std::vector<std::pair<double, double>>& windows, const SweepOptions& opt) {
  if (h1 == h2 || h1 == h3 || h2 == h3)
    throw std::invalid_argument("three_point: shifts must be distinct");
  if (windows.empty()) throw std::invalid_argument("three_point: no windows");

  std::vector<double> checkpoints;
  for (auto [x, w] : windows) {
    if (!(w > 1) || x / w < 1) throw std::invalid_argument("three_point: bad window");
    checkpoints.push_back(x / w);
    checkpoints.push_back(x);
  }
  std::sort(checkpoints.begin(), checkpoints.end());

  CorrelationQuery q;
  q.functions = {g, g, g};
  q.shifts = {h1, h2, h3};
  q.scheme = WeightScheme::Log;
  std::vector<CheckpointSnapshot> snaps = correlate_at(q, checkpoints, opt);

  auto snap_at = [&](double X) -> const WeightedAccumulator& {
    size_t i = std::lower_bound(checkpoints.begin(), checkpoints.end(), X) -
               checkpoints.begin();
    return snaps[i].acc;
  };

  std::vector<ThreePointWindow> out;
  for (auto [x, w] : windows) {
    // E^log over the window x/w <= n <= x = difference of prefix accumulators
    WeightedAccumulator diff = snap_at(x).minus(snap_at(x / w));
    ThreePointWindow tw;
    tw.x = x;
    tw.omega = w;
    tw.value = diff.count() ? diff.value() : std::complex<double>{0, 0};
    tw.magnitude = std::abs(tw.value);
    out.push_back(tw);
  }
  return out;
}

}  // namespace chowla
