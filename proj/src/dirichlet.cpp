#include "chowla/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace chowla {

uint64_t gcd_u64(uint64_t a, uint64_t b) {
  while (b) {
    uint64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

uint64_t pow_mod(uint64_t b, uint64_t e, uint64_t m) {
  if (m == 1) return 0;
  uint64_t r = 1;
  b %= m;
  while (e) {
    if (e & 1) r = (unsigned __int128)r * b % m;
    b = (unsigned __int128)b * b % m;
    e >>= 1;
  }
  return r;
}

uint32_t euler_phi(uint32_t n) {
  uint32_t result = n;
  for (uint32_t p = 2; (uint64_t)p * p <= n; ++p) {
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      result -= result / p;
    }
  }
  if (n > 1) result -= result / n;
  return result;
}

namespace {

uint32_t multiplicative_order(uint32_t a, uint32_t m, uint32_t group_order) {
  // order divides group_order; walk its divisors
  uint32_t ord = group_order;
  for (uint32_t d = 1; (uint64_t)d * d <= group_order; ++d) {
    if (group_order % d) continue;
    if (pow_mod(a, d, m) == 1) { ord = std::min(ord, d); }
    uint32_t e = group_order / d;
    if (pow_mod(a, e, m) == 1) ord = std::min(ord, e);
  }
  return ord;
}

// primitive root mod p^k for odd p (exhaustive search; q is small)
uint32_t primitive_root(uint32_t pk, uint32_t phi) {
  for (uint32_t g = 2; g < pk; ++g) {
    if (gcd_u64(g, pk) != 1) continue;
    if (multiplicative_order(g, pk, phi) == phi) return g;
  }
  throw std::logic_error("no primitive root found");
}

struct Factor {
  uint32_t pk;                        // prime power
  std::vector<uint32_t> gens;         // generators mod pk
  std::vector<uint32_t> orders;       // factor orders
};

// CRT lift: x = a mod pk, x = 1 mod (q/pk)
uint32_t crt_lift(uint32_t a, uint32_t pk, uint32_t q) {
  uint32_t m = q / pk;
  if (m == 1) return a % q;
  for (uint64_t x = a; x < q; x += pk)
    if (x % m == 1) return static_cast<uint32_t>(x);
  throw std::logic_error("crt lift failed");
}

}  // namespace

UnitGroup UnitGroup::of(uint32_t q) {
  if (q == 0) throw std::invalid_argument("unit group: q = 0");
  UnitGroup G;
  G.q = q;
  if (q == 1) {
    G.units = {0};  // the single residue class
  } else {
    for (uint32_t r = 1; r < q; ++r)
      if (gcd_u64(r, q) == 1) G.units.push_back(r);
  }

  // factor q into prime powers and pick generators per factor
  std::vector<Factor> factors;
  uint32_t m = q;
  for (uint32_t p = 2; (uint64_t)p * p <= m; ++p) {
    if (m % p) continue;
    uint32_t pk = 1;
    while (m % p == 0) {
      m /= p;
      pk *= p;
    }
    factors.push_back({pk, {}, {}});
  }
  if (m > 1) factors.push_back({m, {}, {}});

  for (Factor& f : factors) {
    uint32_t pk = f.pk;
    if (pk % 2 == 0) {
      if (pk == 2) {
        // trivial
      } else if (pk == 4) {
        f.gens = {3};
        f.orders = {2};
      } else {
        f.gens = {pk - 1, 5};  // {-1, 5}
        f.orders = {2, pk / 4};
      }
    } else {
      uint32_t phi = euler_phi(pk);
      f.gens = {primitive_root(pk, phi)};
      f.orders = {phi};
    }
  }

  for (const Factor& f : factors) {
    for (size_t i = 0; i < f.gens.size(); ++i) {
      G.generators.push_back(crt_lift(f.gens[i], f.pk, q));
      G.orders.push_back(f.orders[i]);
    }
  }

  // exhaustive dlog table over all exponent tuples
  G.dlog.assign(q, {});
  size_t r = G.generators.size();
  std::vector<uint32_t> tuple(r, 0);
  uint64_t total = 1;
  for (uint32_t d : G.orders) total *= d;
  if (total != G.phi()) throw std::logic_error("unit group: generator orders mismatch phi");
  for (uint64_t it = 0;; ++it) {
    uint64_t x = 1 % q;
    for (size_t i = 0; i < r; ++i) x = x * pow_mod(G.generators[i], tuple[i], q) % q;
    G.dlog[x] = tuple;
    // next tuple
    size_t i = 0;
    while (i < r) {
      if (++tuple[i] < G.orders[i]) break;
      tuple[i++] = 0;
    }
    if (i == r) break;
    if (r == 0) break;
  }
  if (q == 1) G.dlog[0] = {};
  return G;
}

bool DirichletCharacter::is_principal() const {
  for (uint32_t l : label_)
    if (l != 0) return false;
  return true;
}

std::string DirichletCharacter::label() const {
  std::ostringstream ss;
  ss << "chi[q=" << q_ << ";e=(";
  for (size_t i = 0; i < label_.size(); ++i) ss << (i ? "," : "") << label_[i];
  ss << ")]";
  return ss.str();
}

void DirichletCharacter::render() const {
  if (!table_.empty()) return;
  table_.resize(q_);
  for (uint32_t r = 0; r < q_; ++r) {
    int32_t k = expo_[r];
    if (k < 0)
      table_[r] = 0.0;
    else {
      double ang = 2.0 * M_PI * static_cast<double>(k) / order_;
      table_[r] = {std::cos(ang), std::sin(ang)};
    }
  }
}

std::complex<double> DirichletCharacter::value_at_residue(uint32_t r) const {
  render();
  return table_[r];
}

bool DirichletCharacter::same_values(const DirichletCharacter& o) const {
  if (q_ != o.q_) return false;
  for (uint32_t r = 0; r < q_; ++r) {
    int32_t a = expo_[r], b = o.expo_[r];
    if ((a < 0) != (b < 0)) return false;
    if (a < 0) continue;
    // a/order == b/o.order as exact fractions of a full turn
    if ((uint64_t)a * o.order_ != (uint64_t)b * order_) return false;
  }
  return true;
}

std::vector<DirichletCharacter> DirichletCharacter::enumerate(uint32_t q) {
  if (q == 0) throw std::invalid_argument("enumerate_characters: q = 0");
  UnitGroup G = UnitGroup::of(q);
  size_t r = G.generators.size();
  uint32_t L = 1;
  for (uint32_t d : G.orders) L = static_cast<uint32_t>(std::lcm(L, d));

  std::vector<DirichletCharacter> out;
  out.reserve(G.phi());
  std::vector<uint32_t> e(r, 0);  // character exponents on generators
  while (true) {
    DirichletCharacter chi;
    chi.q_ = q;
    chi.order_ = L;
    chi.label_.assign(e.begin(), e.end());
    chi.expo_.assign(q, -1);
    if (q == 1) {
      chi.expo_[0] = 0;
    } else {
      for (uint32_t u : G.units) {
        const std::vector<uint32_t>& dl = G.dlog[u];
        uint64_t k = 0;
        for (size_t i = 0; i < r; ++i)
          k += (uint64_t)e[i] * dl[i] % G.orders[i] * (L / G.orders[i]) % L;
        chi.expo_[u] = static_cast<int32_t>(k % L);
      }
    }
    // chi(-1) is always +/-1: exponent at q-1 is 0 or L/2
    chi.parity_ = (q <= 2 || chi.expo_[q - 1] == 0) ? 1 : -1;
    out.push_back(std::move(chi));
    size_t i = 0;
    while (i < r) {
      if (++e[i] < G.orders[i]) break;
      e[i++] = 0;
    }
    if (i == r) break;
  }
  // principal character has e = (0,...,0) and is produced first by the
  // mixed-radix walk; keep that order
  return out;
}

DirichletCharacter DirichletCharacter::from_exponents(uint32_t q, uint32_t order,
                                                      std::vector<int32_t> expo) {
  if (q == 0 || order == 0 || expo.size() != q)
    throw std::invalid_argument("from_exponents: bad arguments");
  DirichletCharacter chi;
  chi.q_ = q;
  chi.order_ = order;
  chi.expo_ = std::move(expo);
  // exact multiplicativity over residues
  for (uint32_t a = 0; a < q; ++a) {
    for (uint32_t b = 0; b < q; ++b) {
      int32_t ka = chi.expo_[a], kb = chi.expo_[b];
      int32_t kab = chi.expo_[(uint64_t)a * b % q];
      if (ka < 0 || kb < 0) {
        if (kab >= 0) throw std::invalid_argument("from_exponents: unit product of non-units");
        continue;
      }
      if (kab < 0 || (ka + kb) % static_cast<int32_t>(order) != kab)
        throw std::invalid_argument("from_exponents: table not multiplicative");
    }
  }
  chi.parity_ = (q <= 2 || chi.expo_[q - 1] == 0) ? 1 : -1;
  chi.label_ = {};  // unknown generator decomposition
  return chi;
}

}  // namespace chowla
