#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "chowla/factor_sieve.hpp"

namespace chowla {

struct SweepOptions {
  uint64_t segment = kDefaultSegment;
  int threads = 0;  // 0 = hardware concurrency (capped at 8)
};

struct SweepStats {
  uint64_t values_sieved = 0;
  uint64_t blocks = 0;
  double seconds = 0;
  int threads = 0;
  double throughput() const { return seconds > 0 ? values_sieved / seconds : 0; }
};

struct BlockPartial {
  virtual ~BlockPartial() = default;
};

// A consumer of the shared segmented sweep.  process() is called from worker
// threads on disjoint core ranges and must be pure (no shared mutable state);
// absorb() is called on one thread, strictly in ascending block order, which
// is what makes results independent of the thread count.
class BlockConsumer {
 public:
  virtual ~BlockConsumer() = default;

  // largest n whose value this consumer needs
  virtual uint64_t limit() const = 0;
  // extra values needed on each side of the core range (shifted reads)
  virtual uint64_t margin() const { return 0; }

  virtual std::unique_ptr<BlockPartial> process(const FactorBlock& blk, uint64_t core_lo,
                                                uint64_t core_hi) = 0;
  virtual void absorb(std::unique_ptr<BlockPartial> partial) = 0;
};

// Runs one sieve pass over [1, max limit], feeding every consumer.  A
// consumer that throws is marked failed and skipped from then on; the error
// text is returned per consumer (empty = ok).
struct SweepReport {
  SweepStats stats;
  std::vector<std::string> consumer_errors;
};

SweepReport run_sweep(const std::vector<BlockConsumer*>& consumers,
                      const SweepOptions& opt = {});

int resolve_threads(int requested);

}  // namespace chowla
