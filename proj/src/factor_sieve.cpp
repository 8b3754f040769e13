#include "chowla/factor_sieve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "chowla/io.hpp"

namespace chowla {

PrimeTable PrimeTable::upto(uint64_t bound) {
  PrimeTable t;
  t.bound = bound;
  if (bound < 2) return t;
  std::vector<bool> comp(bound + 1, false);
  for (uint64_t i = 2; i * i <= bound; ++i)
    if (!comp[i])
      for (uint64_t j = i * i; j <= bound; j += i) comp[j] = true;
  for (uint64_t i = 2; i <= bound; ++i)
    if (!comp[i]) t.primes.push_back(static_cast<uint32_t>(i));
  return t;
}

void FactorBlock::check_contains(uint64_t n) const {
  if (!contains(n)) {
    std::ostringstream ss;
    ss << "n=" << n << " outside block [" << lo_ << "," << hi_ << ")";
    throw std::out_of_range(ss.str());
  }
}

FactorBlock FactorBlock::sieve(uint64_t lo, uint64_t hi, const PrimeTable& base,
                               uint64_t segment_cap) {
  if (lo < 1 || hi <= lo) throw std::invalid_argument("sieve_block: need 1 <= lo < hi");
  if (hi - lo > segment_cap)
    throw std::invalid_argument("sieve_block: range exceeds segment cap");
  if (base.bound < 1 ||
      static_cast<unsigned __int128>(base.bound) * base.bound < hi)
    throw std::invalid_argument("sieve_block: insufficient base primes (bound^2 < hi)");

  const uint64_t len = hi - lo;
  FactorBlock b;
  b.lo_ = lo;
  b.hi_ = hi;
  b.omega_.assign(len, 0);
  b.pplus_.assign(len, 1);
  b.squarefree_ = PackedBits(len, true);
  b.liouville_ = PackedBits(len, false);

  // residual cofactor of n after dividing out every base prime power
  std::vector<uint64_t> rem(len);
  for (uint64_t i = 0; i < len; ++i) rem[i] = lo + i;

  for (uint32_t p : base.primes) {
    uint64_t pp = p;
    if (pp * pp >= hi) break;
    uint64_t start = ((lo + pp - 1) / pp) * pp;
    for (uint64_t m = start; m < hi; m += pp) {
      uint64_t i = m - lo;
      uint64_t r = rem[i];
      uint8_t e = 0;
      do {
        r /= pp;
        ++e;
      } while (r % pp == 0);
      rem[i] = r;
      b.omega_[i] += e;
      b.pplus_[i] = pp;  // primes ascend, so the last writer is the largest
      if (e >= 2) b.squarefree_.set(i, false);
    }
  }

  for (uint64_t i = 0; i < len; ++i) {
    if (rem[i] > 1) {
      b.omega_[i] += 1;
      b.pplus_[i] = rem[i];  // residual prime > sqrt(hi) beats all base primes
    }
    if (b.omega_[i] & 1) b.liouville_.set(i, true);
  }
  return b;
}

bool FactorBlock::operator==(const FactorBlock& o) const {
  return lo_ == o.lo_ && hi_ == o.hi_ && omega_ == o.omega_ && pplus_ == o.pplus_ &&
         squarefree_ == o.squarefree_ && liouville_ == o.liouville_;
}

namespace {
constexpr char kMagic[4] = {'C', 'H', 'L', 'B'};
constexpr uint32_t kCacheVersion = 1;
}  // namespace

void FactorBlock::save(std::ostream& os) const {
  os.write(kMagic, 4);
  write_u32_le(os, kCacheVersion);
  write_u64_le(os, lo_);
  write_u64_le(os, hi_);
  os.write(reinterpret_cast<const char*>(omega_.data()),
           static_cast<std::streamsize>(omega_.size()));
  for (uint64_t v : pplus_) write_u64_le(os, v);
  for (uint64_t w : squarefree_.words()) write_u64_le(os, w);
  for (uint64_t w : liouville_.words()) write_u64_le(os, w);
}

FactorBlock FactorBlock::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kMagic))
    throw std::runtime_error("block cache: bad magic");
  uint32_t version = read_u32_le(is);
  if (version != kCacheVersion) throw std::runtime_error("block cache: unsupported version");
  FactorBlock b;
  b.lo_ = read_u64_le(is);
  b.hi_ = read_u64_le(is);
  if (b.lo_ < 1 || b.hi_ <= b.lo_) throw std::runtime_error("block cache: bad range");
  uint64_t len = b.hi_ - b.lo_;
  b.omega_.resize(len);
  is.read(reinterpret_cast<char*>(b.omega_.data()), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("block cache: truncated");
  b.pplus_.resize(len);
  for (uint64_t& v : b.pplus_) v = read_u64_le(is);
  b.squarefree_ = PackedBits(len);
  for (uint64_t& w : b.squarefree_.words()) w = read_u64_le(is);
  b.liouville_ = PackedBits(len);
  for (uint64_t& w : b.liouville_.words()) w = read_u64_le(is);
  return b;
}

void FactorBlock::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save(os);
}

FactorBlock FactorBlock::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  return load(is);
}

void for_primes(uint64_t lo, uint64_t hi, const std::function<void(uint64_t)>& fn) {
  if (lo < 1 || hi <= lo) throw std::invalid_argument("for_primes: need 1 <= lo < hi");
  lo = std::max<uint64_t>(lo, 2);
  if (lo >= hi) return;
  uint64_t root = static_cast<uint64_t>(std::sqrt(static_cast<double>(hi))) + 2;
  PrimeTable base = PrimeTable::upto(root);
  constexpr uint64_t kSeg = uint64_t{1} << 22;
  std::vector<uint8_t> comp;
  for (uint64_t seg_lo = lo; seg_lo < hi; ) {
    uint64_t seg_hi = std::min(hi, seg_lo + kSeg);
    comp.assign(seg_hi - seg_lo, 0);
    for (uint32_t p : base.primes) {
      uint64_t pp = p;
      if (pp * pp >= seg_hi) break;
      uint64_t start = std::max(pp * pp, ((seg_lo + pp - 1) / pp) * pp);
      for (uint64_t m = start; m < seg_hi; m += pp) comp[m - seg_lo] = 1;
    }
    for (uint64_t n = seg_lo; n < seg_hi; ++n)
      if (!comp[n - seg_lo]) fn(n);
    seg_lo = seg_hi;
  }
}

std::vector<uint64_t> primes_in(uint64_t lo, uint64_t hi) {
  std::vector<uint64_t> out;
  for_primes(lo, hi, [&](uint64_t p) { out.push_back(p); });
  return out;
}

}  // namespace chowla
