#include "chowla/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace chowla {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CHOWLA_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp<unsigned>(hw ? hw : 1, 1, 8));
}

SweepReport run_sweep(const std::vector<BlockConsumer*>& consumers, const SweepOptions& opt) {
  SweepReport report;
  report.consumer_errors.assign(consumers.size(), "");
  if (consumers.empty()) return report;

  uint64_t limit = 0, margin = 0;
  for (const BlockConsumer* c : consumers) {
    limit = std::max(limit, c->limit());
    margin = std::max(margin, c->margin());
  }
  if (limit < 1) return report;

  const uint64_t segment = std::max<uint64_t>(opt.segment, 1024);
  const uint64_t n_blocks = (limit + segment - 1) / segment;
  const int threads = std::min<int>(resolve_threads(opt.threads),
                                    static_cast<int>(n_blocks));

  PrimeTable base = PrimeTable::upto(
      static_cast<uint64_t>(std::sqrt(static_cast<double>(limit + margin))) + 2);

  auto t0 = std::chrono::steady_clock::now();

  // per-block slots filled by workers; absorbed sequentially in block order
  struct Slot {
    std::vector<std::unique_ptr<BlockPartial>> partials;  // one per consumer
    uint64_t sieved = 0;
    std::atomic<bool> ready{false};
  };
  std::vector<Slot> slots(n_blocks);
  std::vector<std::atomic<bool>> failed(consumers.size());
  for (auto& f : failed) f.store(false);
  std::mutex err_mutex;

  std::atomic<uint64_t> next_block{0};
  std::atomic<uint64_t> sieved_total{0};

  auto worker = [&]() {
    while (true) {
      uint64_t bi = next_block.fetch_add(1);
      if (bi >= n_blocks) break;
      uint64_t core_lo = 1 + bi * segment;
      uint64_t core_hi = std::min(limit + 1, core_lo + segment);
      uint64_t blk_lo = core_lo > margin ? core_lo - margin : 1;
      uint64_t blk_hi = core_hi + margin;
      FactorBlock blk = FactorBlock::sieve(blk_lo, blk_hi, base, segment + 2 * margin + 1);
      Slot& slot = slots[bi];
      slot.partials.resize(consumers.size());
      for (size_t ci = 0; ci < consumers.size(); ++ci) {
        if (failed[ci].load(std::memory_order_relaxed)) continue;
        uint64_t c_hi = std::min(core_hi, consumers[ci]->limit() + 1);
        if (core_lo >= c_hi) continue;
        try {
          slot.partials[ci] = consumers[ci]->process(blk, core_lo, c_hi);
        } catch (const std::exception& e) {
          failed[ci].store(true, std::memory_order_relaxed);
          std::lock_guard<std::mutex> lk(err_mutex);
          if (report.consumer_errors[ci].empty()) report.consumer_errors[ci] = e.what();
        }
      }
      slot.sieved = blk_hi - blk_lo;
      slot.ready.store(true, std::memory_order_release);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);

  // absorb in canonical order while workers keep producing
  for (uint64_t bi = 0; bi < n_blocks; ++bi) {
    while (!slots[bi].ready.load(std::memory_order_acquire)) std::this_thread::yield();
    Slot& slot = slots[bi];
    sieved_total += slot.sieved;
    for (size_t ci = 0; ci < consumers.size(); ++ci) {
      if (!slot.partials[ci] || failed[ci].load(std::memory_order_relaxed)) continue;
      try {
        consumers[ci]->absorb(std::move(slot.partials[ci]));
      } catch (const std::exception& e) {
        failed[ci].store(true, std::memory_order_relaxed);
        std::lock_guard<std::mutex> lk(err_mutex);
        if (report.consumer_errors[ci].empty()) report.consumer_errors[ci] = e.what();
      }
    }
    slot.partials.clear();
  }

  for (auto& t : pool) t.join();

  report.stats.values_sieved = sieved_total.load();
  report.stats.blocks = n_blocks;
  report.stats.threads = threads;
  report.stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace chowla
