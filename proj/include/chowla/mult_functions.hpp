#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chowla/dirichlet.hpp"
#include "chowla/factor_sieve.hpp"

namespace chowla {

// Rule for a user-defined multiplicative function, specified at prime powers
// p^j and extended multiplicatively.  Unspecified prime powers default to 1
// (a warning counter is bumped).  Values must stay within the closed unit
// disk up to 2^-40.
struct CustomRule {
  std::function<std::optional<std::complex<double>>(uint64_t p, int j)> at_prime_power;
  std::string label = "custom";
};

class FunctionSpec {
 public:
  enum class Kind {
    Liouville,
    Moebius,
    LambdaQ,
    Character,
    Archimedean,
    Twisted,
    Product,
    Conjugate,
    Custom
  };

  static FunctionSpec liouville();
  static FunctionSpec moebius();
  static FunctionSpec lambda_q(uint32_t q);
  static FunctionSpec character(DirichletCharacter chi);
  static FunctionSpec character(uint32_t q, uint32_t index);
  static FunctionSpec archimedean(double t);
  static FunctionSpec twisted(DirichletCharacter chi, double t);
  static FunctionSpec product(std::vector<FunctionSpec> parts);
  static FunctionSpec conjugate(FunctionSpec inner);
  static FunctionSpec one();  // principal character mod 1
  static FunctionSpec custom(CustomRule rule);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  uint32_t q() const { return q_; }
  double t() const { return t_; }
  const DirichletCharacter& chi() const { return *chi_; }
  const std::vector<FunctionSpec>& parts() const { return parts_; }
  const FunctionSpec& inner() const { return parts_.front(); }
  const CustomRule& rule() const { return *rule_; }

  // g at a prime / prime power (exact for the built-ins; no sieve needed)
  std::complex<double> value_at_prime(uint64_t p) const;
  std::complex<double> value_at_prime_power(uint64_t p, int j) const;

  // finite value alphabet for pattern censuses: {size, symbol extractor}
  // Liouville -> 2, Moebius -> 3, LambdaQ(q) -> q; nullopt otherwise
  std::optional<uint32_t> finite_alphabet() const;
  uint32_t symbol(const FactorBlock& blk, uint64_t n) const;

  bool is_real_valued() const;

 private:
  FunctionSpec() = default;
  Kind kind_ = Kind::Liouville;
  std::string label_;
  uint32_t q_ = 0;
  double t_ = 0.0;
  std::shared_ptr<const DirichletCharacter> chi_;
  std::vector<FunctionSpec> parts_;
  std::shared_ptr<const CustomRule> rule_;
};

// Per-n evaluation of a spec over sieved data, flattened into a product of
// primitive terms.  Values for n <= 0 are 0 by convention.
class Evaluator {
 public:
  explicit Evaluator(const FunctionSpec& spec);

  std::complex<double> operator()(const FactorBlock& blk, int64_t n) const;

  // number of evaluations that fell back to the default value 1 because a
  // custom rule left the prime power unspecified
  uint64_t custom_default_count() const { return custom_defaults_; }

 private:
  struct Term {
    FunctionSpec::Kind kind;
    bool conj = false;
    uint32_t q = 0;
    double t = 0.0;
    std::vector<std::complex<double>> roots;  // LambdaQ: q-th roots of unity
    std::shared_ptr<const DirichletCharacter> chi;
    std::shared_ptr<const CustomRule> rule;
  };
  void flatten(const FunctionSpec& spec, bool conj);
  std::complex<double> custom_value(const Term& term, uint64_t n) const;

  std::vector<Term> terms_;
  mutable std::vector<uint32_t> small_primes_;  // lazily built for custom rules
  mutable uint64_t custom_defaults_ = 0;
};

// spec module operation: exact values of g over a full block
std::vector<std::complex<double>> evaluate_range(const FunctionSpec& g,
                                                 const FactorBlock& blk);

// Function-spec grammar:
//   liouville | mobius | one | lambda_q(3) | char(q=4,index=1)
//   | archimedean(t=1.5) | twist(char(q=3,index=1), t=2.0)
//   | product(expr, expr, ...) | conj(expr)
// Errors carry the 1-based column of the offending token.
struct SpecParseError : std::runtime_error {
  SpecParseError(size_t column, const std::string& message);
  size_t column;
};
FunctionSpec parse_function_spec(const std::string& text);

}  // namespace chowla
