#include "chowla/mult_functions.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chowla {

namespace {
constexpr double kBoundSlack = 9.094947017729282e-13;  // 2^-40
}

FunctionSpec FunctionSpec::liouville() {
  FunctionSpec s;
  s.kind_ = Kind::Liouville;
  s.label_ = "liouville";
  return s;
}

FunctionSpec FunctionSpec::moebius() {
  FunctionSpec s;
  s.kind_ = Kind::Moebius;
  s.label_ = "mobius";
  return s;
}

FunctionSpec FunctionSpec::lambda_q(uint32_t q) {
  if (q < 2) throw std::invalid_argument("lambda_q: need q >= 2");
  FunctionSpec s;
  s.kind_ = Kind::LambdaQ;
  s.q_ = q;
  s.label_ = "lambda_q(" + std::to_string(q) + ")";
  return s;
}

FunctionSpec FunctionSpec::character(DirichletCharacter chi) {
  FunctionSpec s;
  s.kind_ = Kind::Character;
  s.q_ = chi.modulus();
  s.chi_ = std::make_shared<DirichletCharacter>(std::move(chi));
  s.label_ = s.chi_->label();
  return s;
}

FunctionSpec FunctionSpec::character(uint32_t q, uint32_t index) {
  auto chars = DirichletCharacter::enumerate(q);
  if (index >= chars.size())
    throw std::invalid_argument("character index out of range: phi(" + std::to_string(q) +
                                ") = " + std::to_string(chars.size()));
  FunctionSpec s = character(std::move(chars[index]));
  s.label_ = "char(q=" + std::to_string(q) + ",index=" + std::to_string(index) + ")";
  return s;
}

FunctionSpec FunctionSpec::archimedean(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("archimedean: non-finite t");
  FunctionSpec s;
  s.kind_ = Kind::Archimedean;
  s.t_ = t;
  std::ostringstream ss;
  ss << "archimedean(t=" << t << ")";
  s.label_ = ss.str();
  return s;
}

FunctionSpec FunctionSpec::twisted(DirichletCharacter chi, double t) {
  FunctionSpec s;
  s.kind_ = Kind::Twisted;
  s.q_ = chi.modulus();
  s.t_ = t;
  s.chi_ = std::make_shared<DirichletCharacter>(std::move(chi));
  std::ostringstream ss;
  ss << "twist(" << s.chi_->label() << ",t=" << t << ")";
  s.label_ = ss.str();
  return s;
}

FunctionSpec FunctionSpec::product(std::vector<FunctionSpec> parts) {
  if (parts.empty()) throw std::invalid_argument("product: empty");
  FunctionSpec s;
  s.kind_ = Kind::Product;
  std::string l = "product(";
  for (size_t i = 0; i < parts.size(); ++i) l += (i ? "," : "") + parts[i].label();
  s.label_ = l + ")";
  s.parts_ = std::move(parts);
  return s;
}

FunctionSpec FunctionSpec::conjugate(FunctionSpec inner) {
  FunctionSpec s;
  s.kind_ = Kind::Conjugate;
  s.label_ = "conj(" + inner.label() + ")";
  s.parts_.push_back(std::move(inner));
  return s;
}

FunctionSpec FunctionSpec::one() {
  FunctionSpec s = character(1, 0);
  s.label_ = "one";
  return s;
}

FunctionSpec FunctionSpec::custom(CustomRule rule) {
  FunctionSpec s;
  s.kind_ = Kind::Custom;
  s.label_ = rule.label;
  s.rule_ = std::make_shared<CustomRule>(std::move(rule));
  return s;
}

std::complex<double> FunctionSpec::value_at_prime(uint64_t p) const {
  return value_at_prime_power(p, 1);
}

std::complex<double> FunctionSpec::value_at_prime_power(uint64_t p, int j) const {
  switch (kind_) {
    case Kind::Liouville:
      return (j & 1) ? -1.0 : 1.0;
    case Kind::Moebius:
      return j == 1 ? -1.0 : 0.0;
    case Kind::LambdaQ: {
      double ang = 2.0 * M_PI * (j % q_) / q_;
      return {std::cos(ang), std::sin(ang)};
    }
    case Kind::Character:
      return chi_->value(pow_mod(p, j, q()));
    case Kind::Archimedean: {
      double ang = t_ * std::log(static_cast<double>(p)) * j;
      return {std::cos(ang), std::sin(ang)};
    }
    case Kind::Twisted: {
      double ang = t_ * std::log(static_cast<double>(p)) * j;
      return chi_->value(pow_mod(p, j, q())) * std::complex<double>{std::cos(ang), std::sin(ang)};
    }
    case Kind::Product: {
      std::complex<double> v = 1.0;
      for (const auto& part : parts_) v *= part.value_at_prime_power(p, j);
      return v;
    }
    case Kind::Conjugate:
      return std::conj(parts_.front().value_at_prime_power(p, j));
    case Kind::Custom: {
      auto v = rule_->at_prime_power(p, j);
      if (!v) return 1.0;
      if (std::abs(*v) > 1.0 + kBoundSlack)
        throw std::domain_error("custom rule violates the 1-bounded contract");
      return *v;
    }
  }
  return 0.0;
}

std::optional<uint32_t> FunctionSpec::finite_alphabet() const {
  switch (kind_) {
    case Kind::Liouville:
      return 2;
    case Kind::Moebius:
      return 3;
    case Kind::LambdaQ:
      return q_;
    default:
      return std::nullopt;
  }
}

uint32_t FunctionSpec::symbol(const FactorBlock& blk, uint64_t n) const {
  switch (kind_) {
    case Kind::Liouville:
      return blk.liouville(n) < 0 ? 1u : 0u;
    case Kind::Moebius:
      return static_cast<uint32_t>(blk.mobius(n) + 1);  // {-1,0,1} -> {0,1,2}
    case Kind::LambdaQ:
      return blk.omega(n) % q_;
    default:
      throw std::domain_error("symbol(): function has no finite alphabet");
  }
}

bool FunctionSpec::is_real_valued() const {
  switch (kind_) {
    case Kind::Liouville:
    case Kind::Moebius:
      return true;
    case Kind::Character:
      return chi_->order() <= 2;
    case Kind::Product: {
      for (const auto& p : parts_)
        if (!p.is_real_valued()) return false;
      return true;
    }
    case Kind::Conjugate:
      return parts_.front().is_real_valued();
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const FunctionSpec& spec) { flatten(spec, false); }

void Evaluator::flatten(const FunctionSpec& spec, bool conj) {
  switch (spec.kind()) {
    case FunctionSpec::Kind::Product:
      for (const auto& p : spec.parts()) flatten(p, conj);
      return;
    case FunctionSpec::Kind::Conjugate:
      flatten(spec.inner(), !conj);
      return;
    case FunctionSpec::Kind::Twisted: {
      Term c;
      c.kind = FunctionSpec::Kind::Character;
      c.conj = conj;
      c.q = spec.q();
      c.chi = std::make_shared<DirichletCharacter>(spec.chi());
      terms_.push_back(std::move(c));
      Term a;
      a.kind = FunctionSpec::Kind::Archimedean;
      a.conj = conj;
      a.t = spec.t();
      terms_.push_back(std::move(a));
      return;
    }
    default:
      break;
  }
  Term t;
  t.kind = spec.kind();
  t.conj = conj;
  t.q = spec.q();
  t.t = spec.t();
  switch (spec.kind()) {
    case FunctionSpec::Kind::LambdaQ: {
      t.roots.resize(spec.q());
      for (uint32_t k = 0; k < spec.q(); ++k) {
        double ang = 2.0 * M_PI * k / spec.q();
        t.roots[k] = {std::cos(ang), std::sin(ang)};
      }
      break;
    }
    case FunctionSpec::Kind::Character:
      t.chi = std::make_shared<DirichletCharacter>(spec.chi());
      break;
    case FunctionSpec::Kind::Custom:
      t.rule = std::make_shared<CustomRule>(spec.rule());
      break;
    default:
      break;
  }
  terms_.push_back(std::move(t));
}

std::complex<double> Evaluator::custom_value(const Term& term, uint64_t n) const {
  // extend multiplicatively from prime powers via trial division
  if (small_primes_.empty()) {
    uint64_t bound = 2;
    while (bound * bound < n) bound *= 2;  // grow-as-needed prime table
    small_primes_ = PrimeTable::upto(std::max<uint64_t>(bound, 1 << 16)).primes;
  }
  while ((uint64_t)small_primes_.back() * small_primes_.back() < n) {
    small_primes_ = PrimeTable::upto(small_primes_.back() * 4ull).primes;
  }
  std::complex<double> v = 1.0;
  uint64_t m = n;
  for (uint32_t p : small_primes_) {
    if ((uint64_t)p * p > m) break;
    if (m % p) continue;
    int j = 0;
    while (m % p == 0) {
      m /= p;
      ++j;
    }
    auto val = term.rule->at_prime_power(p, j);
    if (!val) {
      ++custom_defaults_;
      val = 1.0;
    }
    if (std::abs(*val) > 1.0 + kBoundSlack)
      throw std::domain_error("custom rule violates the 1-bounded contract");
    v *= *val;
  }
  if (m > 1) {
    auto val = term.rule->at_prime_power(m, 1);
    if (!val) {
      ++custom_defaults_;
      val = 1.0;
    }
    if (std::abs(*val) > 1.0 + kBoundSlack)
      throw std::domain_error("custom rule violates the 1-bounded contract");
    v *= *val;
  }
  return v;
}

std::complex<double> Evaluator::operator()(const FactorBlock& blk, int64_t n) const {
  if (n <= 0) return 0.0;  // g(n) = 0 for n <= 0
  uint64_t un = static_cast<uint64_t>(n);
  std::complex<double> v = 1.0;
  for (const Term& term : terms_) {
    std::complex<double> f;
    switch (term.kind) {
      case FunctionSpec::Kind::Liouville:
        f = static_cast<double>(blk.liouville(un));
        break;
      case FunctionSpec::Kind::Moebius:
        f = static_cast<double>(blk.mobius(un));
        break;
      case FunctionSpec::Kind::LambdaQ:
        f = term.roots[blk.omega(un) % term.q];
        break;
      case FunctionSpec::Kind::Character:
        f = term.chi->value(un);
        break;
      case FunctionSpec::Kind::Archimedean: {
        if (term.t == 0.0) {
          f = 1.0;
        } else {
          double ang = term.t * std::log(static_cast<double>(un));
          f = {std::cos(ang), std::sin(ang)};
        }
        break;
      }
      case FunctionSpec::Kind::Custom:
        f = custom_value(term, un);
        break;
      default:
        f = 1.0;
        break;
    }
    v *= term.conj ? std::conj(f) : f;
    if (v == std::complex<double>{0.0, 0.0}) return v;
  }
  return v;
}

std::vector<std::complex<double>> evaluate_range(const FunctionSpec& g, const FactorBlock& blk) {
  Evaluator ev(g);
  std::vector<std::complex<double>> out(blk.size());
  for (uint64_t n = blk.lo(); n < blk.hi(); ++n)
    out[n - blk.lo()] = ev(blk, static_cast<int64_t>(n));
  return out;
}

// ---------------------------------------------------------------------------
// grammar

SpecParseError::SpecParseError(size_t col, const std::string& message)
    : std::runtime_error("column " + std::to_string(col) + ": " + message), column(col) {}

namespace {

class SpecParser {
 public:
  explicit SpecParser(const std::string& text) : s_(text) {}

  FunctionSpec parse() {
    FunctionSpec f = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw SpecParseError(pos_ + 1, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return s_.substr(start, pos_ - start);
  }

  double number() {
    skip_ws();
    size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
    bool any = false;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E' ||
                                ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
                                 (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E')))) {
      ++pos_;
      any = true;
    }
    if (!any) fail("expected number");
    try {
      return std::stod(s_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number");
    }
  }

  uint64_t integer() {
    double v = number();
    uint64_t n = static_cast<uint64_t>(v);
    if (static_cast<double>(n) != v) fail("expected integer");
    return n;
  }

  // optional "name =" prefix before a value
  void opt_key(const std::string& name) {
    skip_ws();
    size_t save = pos_;
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      std::string k = ident();
      if (k == name && eat('=')) return;
      pos_ = save;
      if (k == name) fail("expected '=' after '" + name + "'");
      fail("unexpected key '" + k + "'");
    }
  }

  FunctionSpec expr() {
    skip_ws();
    size_t at = pos_;
    std::string name = ident();
    if (name == "liouville") return FunctionSpec::liouville();
    if (name == "mobius" || name == "moebius") return FunctionSpec::moebius();
    if (name == "one") return FunctionSpec::one();
    if (name == "lambda_q") {
      expect('(');
      uint64_t q = integer();
      if (q < 2) { pos_ = at; fail("lambda_q requires q >= 2"); }
      expect(')');
      return FunctionSpec::lambda_q(static_cast<uint32_t>(q));
    }
    if (name == "char") {
      expect('(');
      opt_key("q");
      uint64_t q = integer();
      expect(',');
      opt_key("index");
      uint64_t index = integer();
      expect(')');
      if (q == 0) { pos_ = at; fail("char requires q >= 1"); }
      try {
        return FunctionSpec::character(static_cast<uint32_t>(q), static_cast<uint32_t>(index));
      } catch (const std::invalid_argument& e) {
        pos_ = at;
        fail(e.what());
      }
    }
    if (name == "archimedean") {
      expect('(');
      opt_key("t");
      double t = number();
      expect(')');
      return FunctionSpec::archimedean(t);
    }
    if (name == "twist") {
      expect('(');
      FunctionSpec base = expr();
      expect(',');
      opt_key("t");
      double t = number();
      expect(')');
      if (base.kind() != FunctionSpec::Kind::Character) {
        pos_ = at;
        fail("twist expects a character as first argument");
      }
      return FunctionSpec::twisted(base.chi(), t);
    }
    if (name == "product") {
      expect('(');
      std::vector<FunctionSpec> parts;
      parts.push_back(expr());
      while (eat(',')) parts.push_back(expr());
      expect(')');
      return FunctionSpec::product(std::move(parts));
    }
    if (name == "conj") {
      expect('(');
      FunctionSpec inner = expr();
      expect(')');
      return FunctionSpec::conjugate(std::move(inner));
    }
    pos_ = at;
    fail("unknown function '" + name + "'");
  }

  const std::string& s_;
  size_t pos_ = 0;
};

}  // namespace

FunctionSpec parse_function_spec(const std::string& text) { return SpecParser(text).parse(); }

}  // namespace chowla
