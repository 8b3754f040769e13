#include "chowla/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace chowla {

// ---------------------------------------------------------------------------
// Dickman solver

DickmanSolver::DickmanSolver(double u_max, double step) : u_max_(u_max) {
  if (!(u_max >= 1)) throw std::invalid_argument("dickman: u_max >= 1 required");
  if (!(step > 0) || step > 1e-1) throw std::invalid_argument("dickman: step in (0, 0.1]");
  // align nodes with the integer breakpoints so each smooth piece [m, m+1]
  // has its own exact endpoints
  per_unit_ = static_cast<int64_t>(std::llround(1.0 / step));
  if (per_unit_ < 10) per_unit_ = 10;
  step_ = 1.0 / static_cast<double>(per_unit_);

  int64_t n_nodes = static_cast<int64_t>(std::ceil(u_max * per_unit_)) + 1;
  table_.assign(static_cast<size_t>(n_nodes), 1.0);

  // rho = 1 on [0,1]; march upward one step at a time with Simpson on
  // rho(s-1)/s (4th order; midpoint of the delayed term interpolated)
  for (int64_t i = per_unit_; i + 1 < n_nodes; ++i) {
    double u = static_cast<double>(i) * step_;
    double u1 = u + step_;
    double um = u + 0.5 * step_;
    double f0 = interp(u - 1.0) / u;
    double fm = interp(um - 1.0) / um;
    double f1 = interp(u1 - 1.0) / u1;
    table_[static_cast<size_t>(i + 1)] =
        table_[static_cast<size_t>(i)] - (step_ / 6.0) * (f0 + 4.0 * fm + f1);
  }
}

// cubic interpolation with the 4-node stencil clamped inside the smooth
// piece [m, m+1] containing u; exact on [0, 1]
double DickmanSolver::interp(double u) const {
  if (u <= 1.0) return u < 0.0 ? 0.0 : 1.0;
  double pos = u * static_cast<double>(per_unit_);
  int64_t i = static_cast<int64_t>(std::floor(pos));
  double frac = pos - static_cast<double>(i);
  if (frac < 1e-12 && i < static_cast<int64_t>(table_.size()))
    return value_at_node(i);  // on-grid

  int64_t piece = static_cast<int64_t>(std::floor(u));
  int64_t piece_lo = piece * per_unit_;
  int64_t piece_hi = std::min<int64_t>((piece + 1) * per_unit_,
                                       static_cast<int64_t>(table_.size()) - 1);
  int64_t s = std::clamp(i - 1, piece_lo, piece_hi - 3);
  double x = pos - static_cast<double>(s);  // in [0,3] within the stencil
  const double y0 = value_at_node(s), y1 = value_at_node(s + 1), y2 = value_at_node(s + 2),
               y3 = value_at_node(s + 3);
  // Lagrange basis on nodes 0,1,2,3
  double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
  double l1 = x * (x - 2) * (x - 3) / 2.0;
  double l2 = -x * (x - 1) * (x - 3) / 2.0;
  double l3 = x * (x - 1) * (x - 2) / 6.0;
  return y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3;
}

double DickmanSolver::rho(double u) const {
  if (u < 0) throw std::domain_error("dickman: u < 0");
  if (u > u_max_ + 1e-12) throw std::domain_error("dickman: u > u_max");
  if (u <= 1.0) return 1.0;
  return interp(std::min(u, u_max_));
}

double DickmanSolver::max_dde_residual(double lo, double hi) const {
  int64_t i_lo = static_cast<int64_t>(std::ceil(lo * per_unit_));
  int64_t i_hi = static_cast<int64_t>(std::floor(hi * per_unit_));
  i_hi = std::min<int64_t>(i_hi, static_cast<int64_t>(table_.size()) - 3);
  double worst = 0;
  for (int64_t i = std::max<int64_t>(i_lo, 1); i <= i_hi; ++i) {
    if (i == per_unit_) continue;  // rho' does not exist at the u = 1 kink
    double u = static_cast<double>(i) * step_;
    double d;
    if (i % per_unit_ == 0) {
      // rho'' jumps at integer u; a symmetric quotient across the jump has
      // an O(h) artifact, so take a one-sided second-order stencil
      d = (-3.0 * value_at_node(i) + 4.0 * value_at_node(i + 1) - value_at_node(i + 2)) /
          (2.0 * step_);
    } else {
      d = (value_at_node(i + 1) - value_at_node(i - 1)) / (2.0 * step_);
    }
    double delayed = interp(u - 1.0);
    worst = std::max(worst, std::abs(u * d + delayed));
  }
  return worst;
}

const DickmanSolver& default_dickman() {
  static DickmanSolver solver(20.0, 1e-3);
  return solver;
}

double dickman_rho(double u) { return default_dickman().rho(u); }

// ---------------------------------------------------------------------------
// largest-prime-factor race

namespace {

// consecutive-pair scans read P+(n+1) through the one-element block margin
class RaceConsumer : public BlockConsumer {
 public:
  explicit RaceConsumer(std::vector<uint64_t> bounds) : bounds_(std::move(bounds)) {}

  uint64_t limit() const override { return bounds_.empty() ? 0 : bounds_.back(); }
  uint64_t margin() const override { return 1; }

  struct Partial : BlockPartial {
    uint64_t total = 0;
    std::vector<std::pair<size_t, uint64_t>> at_bounds;
  };

  std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                        uint64_t core_hi) override {
    auto p = std::make_unique<Partial>();
    size_t bi = std::lower_bound(bounds_.begin(), bounds_.end(), core_lo) - bounds_.begin();
    uint64_t hits = 0;
    for (uint64_t n = core_lo; n < core_hi; ++n) {
      while (bi < bounds_.size() && bounds_[bi] < n) p->at_bounds.emplace_back(bi++, hits);
      if (blk.largest_prime_factor(n) < blk.largest_prime_factor(n + 1)) ++hits;
    }
    while (bi < bounds_.size() && bounds_[bi] < core_hi) p->at_bounds.emplace_back(bi++, hits);
    p->total = hits;
    return p;
  }

  void absorb(std::unique_ptr<BlockPartial> partial) override {
    auto* p = static_cast<Partial*>(partial.get());
    for (auto& [bi, h] : p->at_bounds) at_bounds_[bi] = running_ + h;
    running_ += p->total;
  }

  uint64_t hits_at(size_t j) const { return at_bounds_.count(j) ? at_bounds_.at(j) : 0; }

  void init_bounds() { at_bounds_.clear(); }

 private:
  std::vector<uint64_t> bounds_;
  uint64_t running_ = 0;
  std::map<size_t, uint64_t> at_bounds_;
};

}  // namespace

struct RaceJob::Impl {
  std::vector<double> scales;
  std::vector<uint64_t> bounds;
  RaceConsumer consumer;
  Impl(std::vector<double> sc, std::vector<uint64_t> b)
      : scales(std::move(sc)), bounds(b), consumer(std::move(b)) {}
};

RaceJob::RaceJob(const ScaleGrid& grid) {
  grid.validate();
  std::vector<double> scales = grid.scales();
  std::vector<uint64_t> bounds;
  for (double X : scales) bounds.push_back(static_cast<uint64_t>(X));
  impl_ = std::make_unique<Impl>(std::move(scales), std::move(bounds));
}

RaceJob::~RaceJob() = default;
RaceJob::RaceJob(RaceJob&&) noexcept = default;

BlockConsumer& RaceJob::consumer() { return impl_->consumer; }

RaceSeries RaceJob::result() const {
  RaceSeries out;
  out.scales = impl_->scales;
  for (size_t j = 0; j < impl_->scales.size(); ++j) {
    uint64_t hits = impl_->consumer.hits_at(j);
    out.counts.push_back(hits);
    out.freq.push_back(impl_->bounds[j] ? static_cast<double>(hits) / impl_->bounds[j] : 0.0);
  }
  return out;
}

RaceSeries lpf_race(const ScaleGrid& grid, const SweepOptions& opt) {
  RaceJob job(grid);
  std::vector<BlockConsumer*> cs{&job.consumer()};
  SweepReport rep = run_sweep(cs, opt);
  if (!rep.consumer_errors[0].empty()) throw std::runtime_error(rep.consumer_errors[0]);
  return job.result();
}

// ---------------------------------------------------------------------------
// smoothness indicators

bool lpf_below_power(uint64_t pplus, uint64_t n, RationalExponent alpha) {
  if (alpha.num == 0 || alpha.den == 0 || alpha.num >= alpha.den)
    throw std::invalid_argument("smoothness exponent must be a rational in (0,1)");
  // P+ < n^(num/den)  <=>  P+^den < n^num, exact in 128 bits when it fits
  long double lp = alpha.den * std::log2l(static_cast<long double>(pplus));
  long double ln = alpha.num * std::log2l(static_cast<long double>(n));
  if (lp < 126.0L && ln < 126.0L) {
    unsigned __int128 lhs = 1, rhs = 1;
    for (uint64_t i = 0; i < alpha.den; ++i) lhs *= pplus;
    for (uint64_t i = 0; i < alpha.num; ++i) rhs *= n;
    return lhs < rhs;
  }
  // fall back to long-double comparison with a one-ulp guard band
  long double diff = lp - ln;
  const long double guard = 1e-17L * (lp + ln);
  if (diff < -guard) return true;
  if (diff > guard) return false;
  // boundary case: resolve by exact powering mod nothing -- compare
  // logarithms at higher precision is the best we can do here
  return diff < 0;
}

namespace {

class SmoothConsumer : public BlockConsumer {
 public:
  SmoothConsumer(RationalExponent alpha, RationalExponent beta, std::vector<uint64_t> bounds,
                 std::vector<double> scales)
      : alpha_(alpha), beta_(beta), bounds_(std::move(bounds)), scales_(std::move(scales)) {
    cutoff_counts_.assign(bounds_.size(), 0);
    window_diff_.assign(bounds_.size() + 1, 0);
    xa_.reserve(scales_.size());
    xb_.reserve(scales_.size());
    for (double X : scales_) {
      xa_.push_back(std::pow(X, alpha_.value()));
      xb_.push_back(std::pow(X, beta_.value()));
      // X/log X is only increasing past X = e; keep the array monotone so
      // the membership search below stays valid at tiny scales
      uint64_t lo = static_cast<uint64_t>(std::max(1.0, X / std::log(X)));
      if (!window_lo_.empty()) lo = std::max(lo, window_lo_.back());
      window_lo_.push_back(lo);
    }
  }

  uint64_t limit() const override { return bounds_.empty() ? 0 : bounds_.back(); }
  uint64_t margin() const override { return 1; }

  struct Partial : BlockPartial {
    uint64_t total = 0;
    std::vector<std::pair<size_t, uint64_t>> at_bounds;
    // X^alpha variant: for pair n, the first grid index at which it counts
    std::vector<uint64_t> cutoff_incr;
    // windowed variant: difference array over scale indices
    std::vector<int64_t> window_diff;
  };

  std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                        uint64_t core_hi) override {
    auto p = std::make_unique<Partial>();
    p->cutoff_incr.assign(bounds_.size(), 0);
    p->window_diff.assign(bounds_.size() + 1, 0);
    size_t bi = std::lower_bound(bounds_.begin(), bounds_.end(), core_lo) - bounds_.begin();
    uint64_t hits = 0;
    for (uint64_t n = core_lo; n < core_hi; ++n) {
      while (bi < bounds_.size() && bounds_[bi] < n) p->at_bounds.emplace_back(bi++, hits);
      uint64_t pn = blk.largest_prime_factor(n);
      uint64_t pn1 = blk.largest_prime_factor(n + 1);
      if (lpf_below_power(pn, n, alpha_) && lpf_below_power(pn1, n, beta_)) ++hits;
      // threshold qualification is monotone in the scale index
      size_t ja = threshold_scale(pn, pn1);
      size_t j_in = std::lower_bound(bounds_.begin(), bounds_.end(), n) - bounds_.begin();
      size_t j0 = std::max(ja, j_in);
      if (j0 < bounds_.size()) p->cutoff_incr[j0] += 1;
      // window membership X/log X <= n <= X holds on a contiguous scale range
      size_t j_out = std::upper_bound(window_lo_.begin(), window_lo_.end(), n) -
                     window_lo_.begin();  // first scale with lo > n
      if (j0 < j_out) {
        p->window_diff[j0] += 1;
        p->window_diff[j_out] -= 1;
      }
    }
    while (bi < bounds_.size() && bounds_[bi] < core_hi) p->at_bounds.emplace_back(bi++, hits);
    p->total = hits;
    return p;
  }

  void absorb(std::unique_ptr<BlockPartial> partial) override {
    auto* p = static_cast<Partial*>(partial.get());
    for (auto& [bi, h] : p->at_bounds) exact_at_bounds_[bi] = running_ + h;
    running_ += p->total;
    for (size_t j = 0; j < cutoff_counts_.size(); ++j) cutoff_counts_[j] += p->cutoff_incr[j];
    for (size_t j = 0; j < window_diff_.size(); ++j) window_diff_[j] += p->window_diff[j];
  }

  uint64_t exact_hits(size_t j) const {
    return exact_at_bounds_.count(j) ? exact_at_bounds_.at(j) : 0;
  }
  // prefix over the "first qualifying scale" histogram
  std::vector<uint64_t> cutoff_hits() const {
    std::vector<uint64_t> out(cutoff_counts_.size(), 0);
    uint64_t acc = 0;
    for (size_t j = 0; j < cutoff_counts_.size(); ++j) {
      acc += cutoff_counts_[j];
      out[j] = acc;
    }
    return out;
  }
  std::vector<uint64_t> windowed_hits() const {
    std::vector<uint64_t> out(scales_.size(), 0);
    int64_t acc = 0;
    for (size_t j = 0; j < scales_.size(); ++j) {
      acc += window_diff_[j];
      out[j] = static_cast<uint64_t>(acc);
    }
    return out;
  }
  uint64_t window_lo(size_t j) const { return window_lo_[j]; }

 private:
  // first scale whose thresholds X_j^alpha, X_j^beta are above both P+'s
  size_t threshold_scale(uint64_t pn, uint64_t pn1) const {
    size_t j2 = std::upper_bound(xa_.begin(), xa_.end(), static_cast<double>(pn)) - xa_.begin();
    size_t j3 = std::upper_bound(xb_.begin(), xb_.end(), static_cast<double>(pn1)) - xb_.begin();
    return std::max(j2, j3);
  }

  RationalExponent alpha_, beta_;
  std::vector<uint64_t> bounds_;
  std::vector<double> scales_;
  std::vector<double> xa_, xb_;
  std::vector<uint64_t> window_lo_;
  uint64_t running_ = 0;
  std::map<size_t, uint64_t> exact_at_bounds_;
  std::vector<uint64_t> cutoff_counts_;
  std::vector<int64_t> window_diff_;
};

}  // namespace

struct SmoothJob::Impl {
  RationalExponent alpha, beta;
  std::vector<double> scales;
  std::vector<uint64_t> bounds;
  SmoothConsumer consumer;
  Impl(RationalExponent a, RationalExponent b, std::vector<double> sc, std::vector<uint64_t> bd)
      : alpha(a), beta(b), scales(sc), bounds(bd), consumer(a, b, std::move(bd), std::move(sc)) {}
};

SmoothJob::SmoothJob(RationalExponent alpha, RationalExponent beta, const ScaleGrid& grid) {
  grid.validate();
  for (RationalExponent r : {alpha, beta})
    if (r.num == 0 || r.den == 0 || r.num >= r.den)
      throw std::invalid_argument("smoothness exponent must be a rational in (0,1)");
  double inv_a = 1.0 / alpha.value();
  double inv_b = 1.0 / beta.value();
  const DickmanSolver& dick = default_dickman();
  if (inv_a > dick.u_max() || inv_b > dick.u_max())
    throw std::invalid_argument("joint_smooth_density: 1/alpha or 1/beta beyond u_max");
  std::vector<double> scales = grid.scales();
  std::vector<uint64_t> bounds;
  for (double X : scales) bounds.push_back(static_cast<uint64_t>(X));
  impl_ = std::make_unique<Impl>(alpha, beta, std::move(scales), std::move(bounds));
}

SmoothJob::~SmoothJob() = default;
SmoothJob::SmoothJob(SmoothJob&&) noexcept = default;

BlockConsumer& SmoothJob::consumer() { return impl_->consumer; }

SmoothSeries SmoothJob::result() const {
  SmoothSeries out;
  out.scales = impl_->scales;
  out.target = default_dickman().rho(1.0 / impl_->alpha.value()) *
               default_dickman().rho(1.0 / impl_->beta.value());
  std::vector<uint64_t> cut = impl_->consumer.cutoff_hits();
  std::vector<uint64_t> win = impl_->consumer.windowed_hits();
  for (size_t j = 0; j < impl_->scales.size(); ++j) {
    double N = static_cast<double>(impl_->bounds[j]);
    double emp = N > 0 ? impl_->consumer.exact_hits(j) / N : 0.0;
    out.empirical.push_back(emp);
    out.empirical_cutoff.push_back(N > 0 ? cut[j] / N : 0.0);
    double win_n = N - static_cast<double>(impl_->consumer.window_lo(j)) + 1.0;
    out.empirical_windowed.push_back(win_n > 0 ? win[j] / win_n : 0.0);
    out.gap.push_back(emp - out.target);
  }
  return out;
}

SmoothSeries joint_smooth_density(RationalExponent alpha, RationalExponent beta,
                                  const ScaleGrid& grid, const SweepOptions& opt) {
  SmoothJob job(alpha, beta, grid);
  std::vector<BlockConsumer*> cs{&job.consumer()};
  SweepReport rep = run_sweep(cs, opt);
  if (!rep.consumer_errors[0].empty()) throw std::runtime_error(rep.consumer_errors[0]);
  return job.result();
}

}  // namespace chowla
