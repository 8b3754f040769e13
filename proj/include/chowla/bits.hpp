#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace chowla {

// Fixed-size bit array packed into 64-bit words.
class PackedBits {
 public:
  PackedBits() = default;
  explicit PackedBits(size_t n, bool value = false)
      : size_(n), words_((n + 63) / 64, value ? ~uint64_t{0} : 0) {
    trim();
  }

  size_t size() const { return size_; }

  bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(size_t i, bool v) {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  const std::vector<uint64_t>& words() const { return words_; }
  std::vector<uint64_t>& words() { return words_; }

  bool operator==(const PackedBits& o) const {
    return size_ == o.size_ && words_ == o.words_;
  }

 private:
  // bits past size_ are kept zero so whole-word compares are valid
  void trim() {
    if (size_ % 64 != 0 && !words_.empty())
      words_.back() &= (uint64_t{1} << (size_ % 64)) - 1;
  }

  size_t size_ = 0;
  std::vector<uint64_t> words_;
};

}  // namespace chowla
