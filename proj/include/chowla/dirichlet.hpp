#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace chowla {

// Exact character table mod q.  Values on units are stored as exponents k
// with chi(r) = e^(2*pi*i * k / order); residues sharing a factor with q map
// to the sentinel -1 (value 0).  Exact exponents keep orthogonality sums and
// parity checks free of rounding.
class DirichletCharacter {
 public:
  uint32_t modulus() const { return q_; }
  uint32_t order() const { return order_; }
  int parity() const { return parity_; }  // chi(-1); +1 for q <= 2
  bool is_principal() const;
  const std::vector<uint32_t>& generator_label() const { return label_; }
  std::string label() const;

  // value at an integer (uses n mod q); n <= 0 handled by callers
  std::complex<double> value(uint64_t n) const { return value_at_residue(n % q_); }
  std::complex<double> value_at_residue(uint32_t r) const;

  // exponent at residue r: k in [0, order) or -1 when gcd(r, q) > 1
  int32_t exponent_at_residue(uint32_t r) const { return expo_[r]; }

  bool same_values(const DirichletCharacter& o) const;

  // exactly phi(q) characters; the principal character first, then ordered by
  // the exponent vector on the CRT generators (mixed-radix ascending)
  static std::vector<DirichletCharacter> enumerate(uint32_t q);

  // assemble a character from an exact table of exponents over `order`
  // (entries -1 on non-units); validates multiplicativity exactly
  static DirichletCharacter from_exponents(uint32_t q, uint32_t order,
                                           std::vector<int32_t> expo);

 private:
  uint32_t q_ = 1;
  uint32_t order_ = 1;
  int parity_ = 1;
  std::vector<int32_t> expo_;
  std::vector<uint32_t> label_;
  mutable std::vector<std::complex<double>> table_;  // lazily rendered

  void render() const;
  friend struct UnitGroup;
};

// Structure of (Z/qZ)^x as a product of cyclic groups, with explicit
// generators found by CRT over the prime-power factors of q (primitive roots
// by search; 2^k for k >= 3 uses the {-1, 5} pair).
struct UnitGroup {
  uint32_t q = 1;
  std::vector<uint32_t> generators;
  std::vector<uint32_t> orders;             // cyclic factor sizes, same length
  std::vector<uint32_t> units;              // residues coprime to q, ascending
  std::vector<std::vector<uint32_t>> dlog;  // dlog[r]: exponent vector, empty for non-units

  static UnitGroup of(uint32_t q);
  uint32_t phi() const { return static_cast<uint32_t>(units.size()); }
};

uint64_t gcd_u64(uint64_t a, uint64_t b);
uint64_t pow_mod(uint64_t b, uint64_t e, uint64_t m);
uint32_t euler_phi(uint32_t n);

}  // namespace chowla
