#include "chowla/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "chowla/bits.hpp"
#include "chowla/kahan.hpp"

namespace chowla {

std::vector<uint32_t> PatternCensus::decode(uint64_t code) const {
  std::vector<uint32_t> syms(K);
  for (uint32_t i = 0; i < K; ++i) {
    syms[K - 1 - i] = static_cast<uint32_t>(code % alphabet);
    code /= alphabet;
  }
  return syms;
}

namespace {

constexpr uint64_t kBitmapCap = uint64_t{1} << 26;
constexpr uint64_t kFreqCap = uint64_t{1} << 20;

// code space alphabet^K, or 0 on overflow past 2^63
uint64_t code_space(uint32_t alphabet, uint32_t K) {
  unsigned __int128 s = 1;
  for (uint32_t i = 0; i < K; ++i) {
    s *= alphabet;
    if (s > (static_cast<unsigned __int128>(1) << 63)) return 0;
  }
  return static_cast<uint64_t>(s);
}

class CensusConsumer : public BlockConsumer {
 public:
  CensusConsumer(uint32_t K, uint64_t N, const FunctionSpec& fn, uint64_t space,
                 bool keep_freq)
      : K_(K), N_(N), fn_(fn), space_(space), keep_freq_(keep_freq) {
    alphabet_ = *fn.finite_alphabet();
    if (space_ != 0 && space_ <= kBitmapCap) bitmap_ = PackedBits(space_);
    drop_ = 1;
    for (uint32_t i = 0; i + 1 < K_; ++i) drop_ *= alphabet_;
  }

  uint64_t limit() const override { return N_ - K_ + 1; }   // window starts
  uint64_t margin() const override { return K_ - 1 + 1; }   // window tail

  struct PatternStat {
    uint64_t count = 0;
    double log_weight = 0;  // sum of 1/n over occurrences
  };

  struct Partial : BlockPartial {
    std::unordered_map<uint64_t, PatternStat> counts;  // when keeping freqs
    std::vector<uint64_t> seen;                        // distinct codes in block
    uint64_t windows = 0;
  };

  std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                        uint64_t core_hi) override {
    auto p = std::make_unique<Partial>();
    std::unordered_set<uint64_t> local;
    // rolling base-alphabet window over f(n..n+K-1)
    uint64_t code = 0;
    for (uint64_t m = core_lo; m < core_lo + K_ - 1; ++m)
      code = code * alphabet_ + fn_.symbol(blk, m);
    for (uint64_t n = core_lo; n < core_hi; ++n) {
      code = (code % drop_) * alphabet_ + fn_.symbol(blk, n + K_ - 1);
      if (keep_freq_) {
        PatternStat& st = p->counts[code];
        ++st.count;
        st.log_weight += 1.0 / static_cast<double>(n);
      } else if (local.insert(code).second) {
        p->seen.push_back(code);
      }
      ++p->windows;
    }
    if (keep_freq_) {
      p->seen.reserve(p->counts.size());
      for (auto& [c, _] : p->counts) p->seen.push_back(c);
    }
    return p;
  }

  void absorb(std::unique_ptr<BlockPartial> partial) override {
    auto* p = static_cast<Partial*>(partial.get());
    // keep absorption order canonical: sort the block's codes
    std::sort(p->seen.begin(), p->seen.end());
    for (uint64_t c : p->seen) {
      if (bitmap_.size()) {
        if (!bitmap_.get(c)) {
          bitmap_.set(c, true);
          ++distinct_;
        }
      } else {
        if (global_seen_.insert(c).second) ++distinct_;
      }
    }
    if (keep_freq_) {
      for (uint64_t c : p->seen) {
        const PatternStat& st = p->counts.at(c);
        PatternStat& g = counts_[c];
        g.count += st.count;
        g.log_weight += st.log_weight;
      }
    }
    windows_ += p->windows;
  }

  uint64_t distinct() const { return distinct_; }
  uint64_t windows() const { return windows_; }
  const std::map<uint64_t, PatternStat>& counts() const { return counts_; }

 private:
  uint32_t K_;
  uint64_t N_;
  const FunctionSpec& fn_;
  uint64_t space_;
  bool keep_freq_;
  uint32_t alphabet_;
  uint64_t drop_;

  PackedBits bitmap_;
  std::unordered_set<uint64_t> global_seen_;
  std::map<uint64_t, PatternStat> counts_;
  uint64_t distinct_ = 0;
  uint64_t windows_ = 0;
};

}  // namespace

struct CensusJob::Impl {
  uint32_t K;
  uint64_t N;
  FunctionSpec fn;
  bool keep_freq;
  CensusConsumer consumer;
  Impl(uint32_t K_, uint64_t N_, const FunctionSpec& fn_, uint64_t space, bool keep)
      : K(K_), N(N_), fn(fn_), keep_freq(keep), consumer(K_, N_, fn, space, keep) {}
};

CensusJob::CensusJob(uint32_t K, uint64_t N, const FunctionSpec& fn) {
  auto alphabet = fn.finite_alphabet();
  if (!alphabet)
    throw UnsupportedFunctionError("census: function '" + fn.label() +
                                   "' has no finite value alphabet");
  uint32_t max_k = *alphabet == 2 ? 64 : 32;
  if (K < 1 || K > max_k)
    throw std::invalid_argument("census: K out of range (max " + std::to_string(max_k) + ")");
  if (N < K) throw std::invalid_argument("census: N >= K required");
  uint64_t space = code_space(*alphabet, K);
  if (space == 0 && *alphabet > 2)
    throw std::invalid_argument("census: alphabet^K exceeds the packed 64-bit code");
  impl_ = std::make_unique<Impl>(K, N, fn, space, space != 0 && space <= kFreqCap);
}

CensusJob::~CensusJob() = default;
CensusJob::CensusJob(CensusJob&&) noexcept = default;

BlockConsumer& CensusJob::consumer() { return impl_->consumer; }

PatternCensus CensusJob::result() const {
  PatternCensus out;
  out.K = impl_->K;
  out.N = impl_->N;
  out.alphabet = *impl_->fn.finite_alphabet();
  out.frequencies_kept = impl_->keep_freq;
  out.windows = impl_->consumer.windows();
  out.distinct = impl_->consumer.distinct();
  if (out.frequencies_kept) {
    // normalize by the sum over patterns so both densities sum to 1 exactly
    double total_log = 0;
    for (const auto& [code, st] : impl_->consumer.counts()) total_log += st.log_weight;
    for (const auto& [code, st] : impl_->consumer.counts()) {
      PatternCensus::Freq f;
      f.count = st.count;
      f.density_unweighted = static_cast<double>(st.count) / out.windows;
      f.density_log = st.log_weight / total_log;
      f.log_weight = st.log_weight;
      out.frequencies[code] = f;
    }
  }
  return out;
}

PatternCensus census(uint32_t K, uint64_t N, const FunctionSpec& fn, const SweepOptions& opt) {
  CensusJob job(K, N, fn);
  std::vector<BlockConsumer*> cs{&job.consumer()};
  SweepReport rep = run_sweep(cs, opt);
  if (!rep.consumer_errors[0].empty()) throw std::runtime_error(rep.consumer_errors[0]);
  return job.result();
}

std::vector<GrowthRow> growth_report(const std::vector<uint32_t>& K_list, uint64_t N,
                                     const FunctionSpec& fn, const SweepOptions& opt) {
  std::vector<GrowthRow> out;
  for (uint32_t K : K_list) {
    PatternCensus c = census(K, N, fn, opt);
    GrowthRow row;
    row.K = K;
    row.s = c.distinct;
    row.k_plus_5 = K + 5;
    row.k_squared = static_cast<uint64_t>(K) * K;
    double lk = K > 1 ? std::log(static_cast<double>(K)) : 1.0;
    row.hyp_half = std::exp(0.5 * K / lk);
    row.hyp_one = std::exp(1.0 * K / lk);
    // the cited bound s(K) >= K+5 only makes sense once 2^K >= K+5 (K >= 3)
    row.below_cited_lower_bound = K >= 3 && c.alphabet == 2 && c.distinct < row.k_plus_5;
    out.push_back(row);
  }
  return out;
}

}  // namespace chowla
