#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "chowla/mult_functions.hpp"
#include "chowla/sweep.hpp"

namespace chowla {

// Census of length-K value patterns (f(n), ..., f(n+K-1)) for n in
// [1, N-K+1].  Patterns are packed base-alphabet into a 64-bit code;
// distinct counting uses a flat presence bitmap when the code space fits in
// 2^26, a hash set otherwise.  A finite-N census only ever bounds s(K) from
// below.
struct PatternCensus {
  uint32_t K = 1;
  uint64_t N = 0;
  uint32_t alphabet = 2;
  uint64_t windows = 0;   // N - K + 1
  uint64_t distinct = 0;  // s(K) lower bound

  struct Freq {
    uint64_t count = 0;
    double density_unweighted = 0;
    double density_log = 0;   // weight 1/n at the window's left endpoint
    double log_weight = 0;    // raw sum of 1/n, for windowed differences
  };
  // packed pattern -> frequencies; kept only when the code space is at most
  // 2^20 (larger censuses are distinct-count only)
  std::map<uint64_t, Freq> frequencies;
  bool frequencies_kept = true;

  // decode a packed code back into symbols (most significant = leftmost)
  std::vector<uint32_t> decode(uint64_t code) const;
};

struct UnsupportedFunctionError : std::invalid_argument {
  explicit UnsupportedFunctionError(const std::string& m) : std::invalid_argument(m) {}
};

PatternCensus census(uint32_t K, uint64_t N, const FunctionSpec& fn,
                     const SweepOptions& opt = {});

class CensusJob {
 public:
  CensusJob(uint32_t K, uint64_t N, const FunctionSpec& fn);
  ~CensusJob();
  CensusJob(CensusJob&&) noexcept;
  BlockConsumer& consumer();
  PatternCensus result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct GrowthRow {
  uint32_t K = 0;
  uint64_t s = 0;
  uint64_t k_plus_5 = 0;
  uint64_t k_squared = 0;
  double hyp_half = 0;  // exp(0.5 K / ln K)
  double hyp_one = 0;   // exp(1.0 K / ln K)
  bool below_cited_lower_bound = false;  // s < K+5 would indicate a bug
};

std::vector<GrowthRow> growth_report(const std::vector<uint32_t>& K_list, uint64_t N,
                                     const FunctionSpec& fn, const SweepOptions& opt = {});

}  // namespace chowla
