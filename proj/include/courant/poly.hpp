#pragma once

// Coefficient algebras: the polynomial ring Q[x_1..x_n] and the dual numbers
// Q[eps]/(eps^2), with sparse exact polynomials over either.

#include <algorithm>
#include <cctype>
#include <array>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "courant/rational.hpp"

namespace courant {

inline constexpr std::size_t kMaxVars = 8;

class BackendMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A coefficient algebra. Instances are interned, so two backends are equal
/// exactly when their addresses are.
class Backend {
 public:
  enum class Kind { FreePoly, DualNum };

  static const Backend& free_poly(const std::vector<std::string>& vars) {
    if (vars.size() > kMaxVars) throw std::invalid_argument("at most 8 variables are supported");
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (std::size_t j = i + 1; j < vars.size(); ++j)
        if (vars[i] == vars[j]) throw std::invalid_argument("duplicate variable name '" + vars[i] + "'");
    return intern(Kind::FreePoly, vars);
  }

  static const Backend& dual_numbers(const std::string& var = "eps") { return intern(Kind::DualNum, {var}); }

  Kind kind() const { return kind_; }
  bool is_dual() const { return kind_ == Kind::DualNum; }
  std::size_t nvars() const { return vars_.size(); }
  const std::vector<std::string>& vars() const { return vars_; }
  const std::string& var(std::size_t i) const { return vars_.at(i); }

  /// Number of algebra generators; equals the rank of the free part of Der(A).
  std::size_t ngens() const { return vars_.size(); }

  int var_index(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return static_cast<int>(i);
    return -1;
  }

  std::string describe() const {
    std::string s = is_dual() ? "DualNum(" : "FreePoly(";
    for (std::size_t i = 0; i < vars_.size(); ++i) s += (i ? "," : "") + vars_[i];
    return s + ")";
  }

 private:
  Backend(Kind k, std::vector<std::string> v) : kind_(k), vars_(std::move(v)) {}

  static const Backend& intern(Kind k, const std::vector<std::string>& vars) {
    static std::mutex mu;
    static std::deque<Backend> pool;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& b : pool)
      if (b.kind_ == k && b.vars_ == vars) return b;
    pool.push_back(Backend(k, vars));
    return pool.back();
  }

  Kind kind_;
  std::vector<std::string> vars_;
};

struct Monomial {
  std::array<std::uint8_t, kMaxVars> exp{};

  unsigned degree() const {
    unsigned d = 0;
    for (auto e : exp) d += e;
    return d;
  }
  bool is_one() const { return degree() == 0; }

  friend bool operator==(const Monomial&, const Monomial&) = default;

  static Monomial var(std::size_t i, unsigned power = 1) {
    Monomial m;
    m.exp.at(i) = static_cast<std::uint8_t>(power);
    return m;
  }

  friend Monomial operator*(const Monomial& a, const Monomial& b) {
    Monomial m;
    for (std::size_t i = 0; i < kMaxVars; ++i) {
      unsigned e = unsigned(a.exp[i]) + b.exp[i];
      if (e > 255) throw std::overflow_error("monomial exponent overflow");
      m.exp[i] = static_cast<std::uint8_t>(e);
    }
    return m;
  }
};

/// Graded lexicographic order, larger monomials first.
inline bool grlex_greater(const Monomial& a, const Monomial& b) {
  unsigned da = a.degree(), db = b.degree();
  if (da != db) return da > db;
  return a.exp > b.exp;
}

class Poly {
 public:
  using Term = std::pair<Monomial, Rational>;

  Poly() = default;
  explicit Poly(const Backend& b) : backend_(&b) {}
  Poly(const Backend& b, const Rational& c) : backend_(&b) {
    if (!courant::is_zero(c)) terms_.emplace_back(Monomial{}, c);
  }
  Poly(const Backend& b, long c) : Poly(b, Rational(c)) {}

  static Poly variable(const Backend& b, std::size_t i) { return monomial(b, Monomial::var(i), Rational(1)); }

  static Poly monomial(const Backend& b, const Monomial& m, const Rational& c) {
    Poly p(b);
    if (!courant::is_zero(c) && valid_for(b, m)) p.terms_.emplace_back(m, c);
    return p;
  }

  const Backend* backend() const { return backend_; }
  const std::vector<Term>& terms() const { return terms_; }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].first.is_one()); }

  Rational constant_term() const {
    if (!terms_.empty() && terms_.back().first.is_one()) return terms_.back().second;
    return Rational(0);
  }

  Rational coefficient(const Monomial& m) const {
    for (const auto& [mono, c] : terms_)
      if (mono == m) return c;
    return Rational(0);
  }

  unsigned total_degree() const { return terms_.empty() ? 0 : terms_.front().first.degree(); }

  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

  Poly operator-() const {
    Poly r = *this;
    for (auto& t : r.terms_) t.second = -t.second;
    return r;
  }

  Poly& operator+=(const Poly& o) { return accumulate(o, false); }
  Poly& operator-=(const Poly& o) { return accumulate(o, true); }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }
  Poly& operator*=(const Rational& q) {
    if (courant::is_zero(q)) {
      terms_.clear();
    } else {
      for (auto& t : terms_) t.second *= q;
    }
    return *this;
  }

  friend Poly operator+(const Poly& a, const Poly& b) { return add(a, b, false); }
  friend Poly operator-(const Poly& a, const Poly& b) { return add(a, b, true); }
  friend Poly operator*(Poly a, const Rational& q) { return a *= q; }
  friend Poly operator*(const Rational& q, Poly a) { return a *= q; }

  friend Poly operator*(const Poly& a, const Poly& b) {
    const Backend* be = join(a, b);
    Poly r;
    r.backend_ = be;
    if (a.terms_.empty() || b.terms_.empty()) return r;
    if (a.is_constant()) return b * a.terms_[0].second;
    if (b.is_constant()) return a * b.terms_[0].second;
    std::vector<Term> prod;
    prod.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        Monomial m = ma * mb;
        if (be && !valid_for(*be, m)) continue;
        prod.emplace_back(m, ca * cb);
      }
    r.terms_ = normalize(std::move(prod));
    return r;
  }

  /// Coordinate partial: d/dx_g for FreePoly; for DualNum the eps-coefficient,
  /// so that every derivation D into any module satisfies D(a) = sum_g partial_g(a) D(x_g).
  Poly partial(std::size_t g) const {
    Poly r;
    r.backend_ = backend_;
    std::vector<Term> out;
    for (const auto& [m, c] : terms_) {
      if (m.exp.at(g) == 0) continue;
      Monomial d = m;
      d.exp[g] -= 1;
      out.emplace_back(d, c * m.exp[g]);
    }
    r.terms_ = normalize(std::move(out));
    return r;
  }

  /// Applies the algebra automorphism x_i -> x_{perm[i]}.
  Poly permute_vars(const std::vector<std::size_t>& perm) const {
    Poly r;
    r.backend_ = backend_;
    std::vector<Term> out;
    for (const auto& [m, c] : terms_) {
      Monomial pm;
      for (std::size_t i = 0; i < perm.size(); ++i) pm.exp.at(perm[i]) = m.exp[i];
      out.emplace_back(pm, c);
    }
    r.terms_ = normalize(std::move(out));
    return r;
  }

  std::string to_string() const;

  static bool valid_for(const Backend& b, const Monomial& m) {
    for (std::size_t i = b.nvars(); i < kMaxVars; ++i)
      if (m.exp[i] != 0) return false;
    if (b.is_dual() && m.exp[0] > 1) return false;
    return true;
  }

 private:
  static const Backend* join(const Poly& a, const Poly& b) {
    if (a.backend_ && b.backend_ && a.backend_ != b.backend_)
      throw BackendMismatch("backend mismatch: " + a.backend_->describe() + " vs " + b.backend_->describe());
    return a.backend_ ? a.backend_ : b.backend_;
  }

  Poly& accumulate(const Poly& o, bool subtract) {
    backend_ = join(*this, o);
    if (o.terms_.empty()) return *this;
    if (terms_.empty()) {
      terms_ = o.terms_;
      if (subtract)
        for (auto& t : terms_) t.second = -t.second;
      return *this;
    }
    return *this = add(*this, o, subtract);
  }

  static Poly add(const Poly& a, const Poly& b, bool subtract) {
    if (b.terms_.empty()) {
      Poly r = a;
      r.backend_ = join(a, b);
      return r;
    }
    Poly r;
    r.backend_ = join(a, b);
    std::vector<Term> out;
    out.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && grlex_greater(a.terms_[i].first, b.terms_[j].first))) {
        out.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || grlex_greater(b.terms_[j].first, a.terms_[i].first)) {
        out.emplace_back(b.terms_[j].first, subtract ? Rational(-b.terms_[j].second) : b.terms_[j].second);
        ++j;
      } else {
        Rational c = subtract ? Rational(a.terms_[i].second - b.terms_[j].second)
                              : Rational(a.terms_[i].second + b.terms_[j].second);
        if (!courant::is_zero(c)) out.emplace_back(a.terms_[i].first, std::move(c));
        ++i;
        ++j;
      }
    }
    r.terms_ = std::move(out);
    return r;
  }

  static std::vector<Term> normalize(std::vector<Term> v) {
    std::sort(v.begin(), v.end(), [](const Term& x, const Term& y) { return grlex_greater(x.first, y.first); });
    std::vector<Term> out;
    out.reserve(v.size());
    for (auto& t : v) {
      if (!out.empty() && out.back().first == t.first) {
        out.back().second += t.second;
      } else {
        if (!out.empty() && courant::is_zero(out.back().second)) out.pop_back();
        out.push_back(std::move(t));
      }
    }
    if (!out.empty() && courant::is_zero(out.back().second)) out.pop_back();
    return out;
  }

  const Backend* backend_ = nullptr;
  std::vector<Term> terms_;
};

inline std::string monomial_to_string(const Backend& b, const Monomial& m) {
  std::string s;
  for (std::size_t i = 0; i < b.nvars(); ++i) {
    if (m.exp[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += b.var(i);
    if (m.exp[i] > 1) s += "^" + std::to_string(m.exp[i]);
  }
  return s;
}

inline std::string Poly::to_string() const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    Rational a = abs(c);
    bool neg = sgn(c) < 0;
    if (first) {
      if (neg) s += "-";
    } else {
      s += neg ? " - " : " + ";
    }
    first = false;
    if (m.is_one()) {
      s += a.get_str();
    } else {
      if (a != 1) s += a.get_str() + "*";
      s += monomial_to_string(*backend_, m);
    }
  }
  return s;
}

/// Parser for polynomial literals such as `3/2*x^2*y - eps + 1`. Parentheses
/// and products of parenthesized sums are accepted; there is no division by
/// anything but integer literals inside rational constants.
class PolyParser {
 public:
  PolyParser(const Backend& b, std::string_view text, std::size_t offset = 0) : b_(b), s_(text), base_(offset) {}

  Poly parse_all() {
    Poly p = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, base_ + pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n')) ++pos_;
  }

  Poly parse_sum() {
    skip_ws();
    Poly acc(b_);
    bool neg = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      neg = s_[pos_] == '-';
      ++pos_;
    }
    Poly t = parse_product();
    acc = neg ? acc - t : acc + t;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) break;
      bool minus = s_[pos_] == '-';
      ++pos_;
      Poly u = parse_product();
      acc = minus ? acc - u : acc + u;
    }
    return acc;
  }

  Poly parse_product() {
    Poly acc = parse_power();
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '*') {
        ++pos_;
        acc = acc * parse_power();
      } else {
        break;
      }
    }
    return acc;
  }

  Poly parse_power() {
    Poly base = parse_atom();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '^') {
      ++pos_;
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected exponent");
      int e = std::stoi(std::string(s_.substr(start, pos_ - start)));
      Poly r(b_, 1);
      for (int k = 0; k < e; ++k) r = r * base;
      return r;
    }
    return base;
  }

  Poly parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of polynomial");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Poly p = parse_sum();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/')) ++pos_;
      try {
        return Poly(b_, parse_rational(s_.substr(start, pos_ - start)));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), base_ + start);
      }
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      int idx = b_.var_index(name);
      if (idx < 0) {
        pos_ = start;
        fail("unknown variable '" + name + "' for " + b_.describe());
      }
      return Poly::variable(b_, static_cast<std::size_t>(idx));
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  const Backend& b_;
  std::string_view s_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline Poly parse_poly(const Backend& b, std::string_view text) { return PolyParser(b, text).parse_all(); }

/// Inverse of a unit of A; throws if the argument is not invertible.
inline Poly unit_inverse(const Poly& p) {
  const Backend* b = p.backend();
  if (p.is_zero()) throw std::domain_error("zero is not a unit");
  if (p.is_constant()) return Poly(*b, Rational(1) / p.constant_term());
  if (b && b->is_dual()) {
    Rational a0 = p.constant_term();
    if (is_zero(a0)) throw std::domain_error("'" + p.to_string() + "' is not a unit");
    Rational a1 = p.coefficient(Monomial::var(0));
    Poly inv(*b, Rational(1) / a0);
    return inv - Poly::monomial(*b, Monomial::var(0), a1 / (a0 * a0));
  }
  throw std::domain_error("'" + p.to_string() + "' is not a unit");
}

}  // namespace courant
