#pragma once

// The graded algebra C(E) of quasi-Courant multilinear maps.
//
// A degree r >= 2 element C is stored by its values C(e_{a1},...,e_{a_{r-1}})
// on basis tuples, together with the maps K_g(C) = [C, x_g] in C^{r-2} for
// every algebra generator x_g. These determine the symbol, since
// sigma_C(y_1..y_{r-2}) a = sum_g d_g(a) <K_g(C)(y_1..y_{r-3}), y_{r-2}>,
// and they determine C on arbitrary arguments through the derivation rule in
// the last slot and the symmetrised swap rule between adjacent slots.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "courant/metric_module.hpp"
#include "courant/rothstein.hpp"

namespace courant {

inline constexpr int kMaxCDegree = 10;

class CMap {
 public:
  CMap() = default;

  static CMap zero(const MetricModule& m, int r) {
    if (r < 0 || r > kMaxCDegree) throw std::invalid_argument("degree out of range: " + std::to_string(r));
    CMap c;
    c.mod_ = &m;
    c.r_ = r;
    if (r == 0) {
      c.scalar_ = Poly(m.backend());
    } else if (r == 1) {
      c.vec_ = ModuleElement(m);
    } else {
      c.values_.assign(table_size(m, r), ModuleElement(m));
      for (std::size_t g = 0; g < m.backend().ngens(); ++g) c.dterms_.push_back(zero(m, r - 2));
    }
    return c;
  }

  static CMap scalar(const MetricModule& m, const Poly& a) {
    CMap c = zero(m, 0);
    c.scalar_ = a + Poly(m.backend());
    return c;
  }

  static CMap vector(const ModuleElement& x) {
    CMap c = zero(x.module(), 1);
    c.vec_ = x;
    return c;
  }

  /// values has rank^(r-1) entries in lexicographic tuple order; dterms has
  /// one entry of degree r-2 per algebra generator.
  static CMap from_tables(const MetricModule& m, int r, std::vector<ModuleElement> values, std::vector<CMap> dterms) {
    if (r < 2) throw std::invalid_argument("tables describe elements of degree at least 2");
    if (r > kMaxCDegree) throw std::invalid_argument("degree out of range: " + std::to_string(r));
    if (values.size() != table_size(m, r))
      throw std::invalid_argument("incomplete table: expected " + std::to_string(table_size(m, r)) + " values, got " +
                                  std::to_string(values.size()));
    if (dterms.size() != m.backend().ngens())
      throw std::invalid_argument("incomplete table: expected one symbol entry per algebra generator");
    for (const auto& v : values)
      if (v.module_ptr() != &m) throw ModuleMismatch("table value lives in another module");
    for (const auto& d : dterms)
      if (d.mod_ != &m || d.r_ != r - 2) throw std::invalid_argument("symbol entry has wrong degree or module");
    CMap c;
    c.mod_ = &m;
    c.r_ = r;
    c.values_ = std::move(values);
    c.dterms_ = std::move(dterms);
    return c;
  }

  static std::size_t table_size(const MetricModule& m, int r) {
    std::size_t s = 1;
    for (int i = 0; i + 1 < r; ++i) s *= m.rank();
    return s;
  }

  int degree() const { return r_; }
  const MetricModule& module() const { return *mod_; }
  const MetricModule* module_ptr() const { return mod_; }
  const Backend& backend() const { return mod_->backend(); }

  const Poly& scalar_value() const { return scalar_; }
  const ModuleElement& vector_value() const { return vec_; }
  const std::vector<ModuleElement>& values() const { return values_; }
  const std::vector<CMap>& dterms() const { return dterms_; }
  const CMap& dterm(std::size_t g) const { return dterms_.at(g); }

  std::size_t index(const std::vector<std::size_t>& tuple) const {
    if (static_cast<int>(tuple.size()) != r_ - 1) throw std::invalid_argument("tuple length must be degree - 1");
    std::size_t i = 0;
    for (auto a : tuple) {
      if (a >= mod_->rank()) throw std::out_of_range("basis index out of range");
      i = i * mod_->rank() + a;
    }
    return i;
  }
  const ModuleElement& value(const std::vector<std::size_t>& tuple) const { return values_.at(index(tuple)); }
  ModuleElement& value(const std::vector<std::size_t>& tuple) { return values_.at(index(tuple)); }
  CMap& dterm(std::size_t g) { return dterms_.at(g); }

  bool is_zero() const {
    if (r_ == 0) return scalar_.is_zero();
    if (r_ == 1) return vec_.is_zero();
    for (const auto& v : values_)
      if (!v.is_zero()) return false;
    for (const auto& d : dterms_)
      if (!d.is_zero()) return false;
    return true;
  }

  /// Largest coefficient degree appearing anywhere in the tables.
  unsigned max_coeff_degree() const {
    unsigned d = 0;
    auto upd = [&](const Poly& p) { d = std::max(d, p.total_degree()); };
    if (r_ == 0) upd(scalar_);
    if (r_ == 1)
      for (const auto& p : vec_.coeffs()) upd(p);
    for (const auto& v : values_)
      for (const auto& p : v.coeffs()) upd(p);
    for (const auto& k : dterms_) d = std::max(d, k.max_coeff_degree());
    return d;
  }

  friend bool operator==(const CMap& a, const CMap& b) {
    if (a.mod_ != b.mod_ || a.r_ != b.r_) return false;
    if (a.r_ == 0) return a.scalar_ == b.scalar_;
    if (a.r_ == 1) return a.vec_ == b.vec_;
    if (!(a.values_ == b.values_)) return false;
    for (std::size_t g = 0; g < a.dterms_.size(); ++g)
      if (!(a.dterms_[g] == b.dterms_[g])) return false;
    return true;
  }
  friend bool operator!=(const CMap& a, const CMap& b) { return !(a == b); }

  CMap& operator+=(const CMap& o) { return combine(o, false); }
  CMap& operator-=(const CMap& o) { return combine(o, true); }
  friend CMap operator+(CMap a, const CMap& b) { return a += b; }
  friend CMap operator-(CMap a, const CMap& b) { return a -= b; }
  CMap operator-() const { return Rational(-1) * *this; }

  friend CMap operator*(const Poly& f, CMap c) {
    if (c.r_ == 0) c.scalar_ = f * c.scalar_;
    if (c.r_ == 1) c.vec_ = f * c.vec_;
    for (auto& v : c.values_) v = f * v;
    for (auto& d : c.dterms_) d = f * d;
    return c;
  }
  friend CMap operator*(const Rational& q, CMap c) {
    if (c.r_ == 0) c.scalar_ *= q;
    if (c.r_ == 1) c.vec_ = q * c.vec_;
    for (auto& v : c.values_) v = q * v;
    for (auto& d : c.dterms_) d = q * d;
    return c;
  }

  /// Compact description of the nonzero table entries.
  std::string to_string() const {
    if (r_ == 0) return scalar_.to_string();
    if (r_ == 1) return vec_.to_string();
    std::string s;
    std::vector<std::size_t> t(r_ - 1, 0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!values_[i].is_zero()) {
        if (!s.empty()) s += "; ";
        s += "C(" + tuple_name(t) + ") = " + values_[i].to_string();
      }
      bump(t);
    }
    for (std::size_t g = 0; g < dterms_.size(); ++g) {
      if (dterms_[g].is_zero()) continue;
      if (!s.empty()) s += "; ";
      s += "[C," + backend().var(g) + "] = {" + dterms_[g].to_string() + "}";
    }
    return s.empty() ? "0" : s;
  }

  std::string tuple_name(const std::vector<std::size_t>& t) const {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + mod_->names()[t[i]];
    return s;
  }

  /// Advances a tuple in lexicographic order; false after the last one.
  bool bump(std::vector<std::size_t>& t) const {
    for (std::size_t k = t.size(); k-- > 0;) {
      if (++t[k] < mod_->rank()) return true;
      t[k] = 0;
    }
    return false;
  }

 private:
  CMap& combine(const CMap& o, bool sub) {
    if (mod_ != o.mod_) throw ModuleMismatch("module mismatch");
    if (r_ != o.r_) throw std::invalid_argument("cannot add elements of different degree");
    if (r_ == 0) scalar_ = sub ? scalar_ - o.scalar_ : scalar_ + o.scalar_;
    if (r_ == 1) vec_ = sub ? vec_ - o.vec_ : vec_ + o.vec_;
    for (std::size_t i = 0; i < values_.size(); ++i) sub ? values_[i] -= o.values_[i] : values_[i] += o.values_[i];
    for (std::size_t g = 0; g < dterms_.size(); ++g) dterms_[g].combine(o.dterms_[g], sub);
    return *this;
  }

  const MetricModule* mod_ = nullptr;
  int r_ = 0;
  Poly scalar_;
  ModuleElement vec_;
  std::vector<ModuleElement> values_;
  std::vector<CMap> dterms_;
};

namespace detail {

// A lightweight handle on C with some basis elements already inserted on the
// left. Inserting into a degree 1 view pairs with the gram; inserting into a
// degree 0 view gives zero.
struct View {
  enum class Kind : std::uint8_t { Zero, Scalar, Vec, Table };
  Kind kind = Kind::Zero;
  int deg = 0;
  const MetricModule* mod = nullptr;
  const CMap* base = nullptr;
  std::array<std::uint8_t, kMaxCDegree> prefix{};
  int plen = 0;
  const ModuleElement* vec = nullptr;
  Poly scalar;

  static View of(const CMap& c) {
    View v;
    v.mod = c.module_ptr();
    v.deg = c.degree();
    if (c.degree() >= 2) {
      v.kind = Kind::Table;
      v.base = &c;
    } else if (c.degree() == 1) {
      v.kind = Kind::Vec;
      v.vec = &c.vector_value();
    } else {
      v.kind = Kind::Scalar;
      v.scalar = c.scalar_value();
      if (v.scalar.is_zero()) v.kind = Kind::Zero;
    }
    return v;
  }

  static View zero(const MetricModule* m, int d) {
    View v;
    v.mod = m;
    v.deg = d;
    return v;
  }

  bool is_zero() const { return kind == Kind::Zero; }

  std::size_t table_index(const std::uint8_t* rest, int n) const {
    std::size_t i = 0, m = mod->rank();
    for (int k = 0; k < plen; ++k) i = i * m + prefix[k];
    for (int k = 0; k < n; ++k) i = i * m + rest[k];
    return i;
  }

  View insert(std::uint8_t b) const {
    switch (kind) {
      case Kind::Zero:
        return zero(mod, deg - 1);
      case Kind::Scalar:
        return zero(mod, -1);
      case Kind::Vec: {
        View v = zero(mod, 0);
        v.scalar = inner_basis(*vec, b);
        if (!v.scalar.is_zero()) v.kind = Kind::Scalar;
        return v;
      }
      case Kind::Table:
        break;
    }
    if (deg >= 3) {
      View v = *this;
      v.prefix[v.plen++] = b;
      v.deg = deg - 1;
      return v;
    }
    View v = zero(mod, 1);
    v.kind = Kind::Vec;
    v.vec = &base->values()[table_index(&b, 1)];
    return v;
  }

  /// [view, x_g].
  View k(std::size_t g) const {
    if (kind != Kind::Table) return zero(mod, deg - 2);
    View v = of(base->dterm(g));
    for (int i = 0; i < plen && !v.is_zero(); ++i) v = v.insert(prefix[i]);
    if (v.is_zero()) v.deg = deg - 2;
    return v;
  }

  /// Value on basis arguments; for Table the tuple has deg-1 entries.
  const ModuleElement& table_value(const std::uint8_t* t) const { return base->values()[table_index(t, deg - 1)]; }
};

struct Slot {
  Monomial mono;
  std::uint8_t basis = 0;
};

// <C(s_0, ..., s_{n-2}), s_{n-1}> for slots that are monomial multiples of
// basis elements. A monomial is moved to the last slot by adjacent swaps,
// each of which costs a symbol correction, and then pulled out.
inline Poly omega_slots(const View& v, const Slot* s, int n) {
  const Backend& b = v.mod->backend();
  if (v.is_zero()) return Poly(b);
  if (n == 0) return v.scalar;
  int j = n - 1;
  while (j >= 0 && s[j].mono.is_one()) --j;
  if (j < 0) {
    if (v.kind == View::Kind::Vec) return inner_basis(*v.vec, s[0].basis);
    std::array<std::uint8_t, kMaxCDegree> t{};
    for (int i = 0; i + 1 < n; ++i) t[i] = s[i].basis;
    return inner_basis(v.table_value(t.data()), s[n - 1].basis);
  }
  std::array<Slot, kMaxCDegree> t{};
  std::copy(s, s + n, t.begin());
  if (j == n - 1) {
    t[j].mono = Monomial{};
    Poly w = omega_slots(v, t.data(), n);
    if (w.is_zero()) return w;
    return Poly::monomial(b, s[j].mono, Rational(1)) * w;
  }
  std::swap(t[j], t[j + 1]);
  Poly out = -omega_slots(v, t.data(), n);
  Poly pairing = Poly::monomial(b, s[j].mono, Rational(1)) * v.mod->g(s[j].basis, s[j + 1].basis);
  if (pairing.is_zero() || n < 2) return out;
  std::array<Slot, kMaxCDegree> rest{};
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (i != j && i != j + 1) rest[k++] = s[i];
  for (std::size_t g = 0; g < b.ngens(); ++g) {
    Poly pg = pairing.partial(g);
    if (pg.is_zero()) continue;
    View kv = v.k(g);
    if (kv.is_zero()) continue;
    Poly w = omega_slots(kv, rest.data(), n - 2);
    if (!w.is_zero()) out += pg * w;
  }
  return out;
}

// Q-multilinear expansion of general module elements into slots.
inline Poly omega_args(const View& v, const std::vector<ModuleElement>& args) {
  const Backend& b = v.mod->backend();
  Poly out(b);
  const int n = static_cast<int>(args.size());
  if (n != v.deg) throw std::invalid_argument("arity mismatch");
  std::array<Slot, kMaxCDegree> s{};
  std::function<void(int, Rational)> rec = [&](int i, Rational coef) {
    if (i == n) {
      Poly w = omega_slots(v, s.data(), n);
      if (!w.is_zero()) out += w * coef;
      return;
    }
    const ModuleElement& x = args[i];
    for (std::size_t a = 0; a < x.coeffs().size(); ++a)
      for (const auto& [m, c] : x[a].terms()) {
        s[i].mono = m;
        s[i].basis = static_cast<std::uint8_t>(a);
        rec(i + 1, coef * c);
      }
  };
  rec(0, Rational(1));
  return out;
}

}  // namespace detail

/// omega_C(x_1..x_r) = <C(x_1..x_{r-1}), x_r>.
inline Poly cmap_omega(const CMap& c, const std::vector<ModuleElement>& args) {
  if (static_cast<int>(args.size()) != c.degree())
    throw std::invalid_argument("arity mismatch: expected " + std::to_string(c.degree()) + " arguments, got " +
                                std::to_string(args.size()));
  for (const auto& a : args)
    if (a.module_ptr() != c.module_ptr()) throw ModuleMismatch("argument lives in another module");
  return detail::omega_args(detail::View::of(c), args);
}

/// C(x_1, ..., x_{r-1}).
inline ModuleElement cmap_eval(const CMap& c, const std::vector<ModuleElement>& args) {
  if (c.degree() < 1) throw std::invalid_argument("degree 0 elements take no arguments");
  if (static_cast<int>(args.size()) != c.degree() - 1)
    throw std::invalid_argument("arity mismatch: expected " + std::to_string(c.degree() - 1) + " arguments, got " +
                                std::to_string(args.size()));
  if (c.degree() == 1) return c.vector_value();
  const MetricModule& m = c.module();
  std::vector<Poly> w(m.rank());
  std::vector<ModuleElement> full = args;
  full.push_back(ModuleElement(m));
  for (std::size_t b = 0; b < m.rank(); ++b) {
    full.back() = ModuleElement::basis(m, b);
    w[b] = cmap_omega(c, full);
  }
  return raise_index(m, w);
}

/// sigma_C(y_1..y_{r-2}) a.
inline Poly cmap_sigma(const CMap& c, const std::vector<ModuleElement>& args, const Poly& a) {
  if (c.degree() < 2) throw std::invalid_argument("the symbol needs degree at least 2");
  if (static_cast<int>(args.size()) != c.degree() - 2) throw std::invalid_argument("arity mismatch");
  Poly out(c.backend());
  for (std::size_t g = 0; g < c.backend().ngens(); ++g) {
    Poly pg = a.partial(g);
    if (pg.is_zero()) continue;
    out += pg * cmap_omega(c.dterm(g), args);
  }
  return out;
}

/// d_C(y_1..y_{r-3}) a, the element with <d_C(..)a, y> = sigma_C(.., y) a.
inline ModuleElement cmap_d(const CMap& c, const std::vector<ModuleElement>& args, const Poly& a) {
  if (c.degree() < 3) throw std::invalid_argument("d_C needs degree at least 3");
  ModuleElement out(c.module());
  for (std::size_t g = 0; g < c.backend().ngens(); ++g) {
    Poly pg = a.partial(g);
    if (pg.is_zero()) continue;
    out += pg * cmap_eval(c.dterm(g), args);
  }
  return out;
}

inline constexpr int kMaxBracketInput = 8;

namespace detail {

inline ModuleElement vec_of(const View& v) {
  if (v.kind == View::Kind::Vec) return *v.vec;
  return ModuleElement(*v.mod);
}

inline Poly scalar_of(const View& v) {
  if (v.kind == View::Kind::Scalar) return v.scalar;
  return Poly(v.mod->backend());
}

// sigma_D(a) for a degree 2 view.
inline Poly sigma2(const View& d, const Poly& a) {
  Poly out(d.mod->backend());
  for (std::size_t g = 0; g < d.mod->backend().ngens(); ++g) {
    Poly pg = a.partial(g);
    if (pg.is_zero()) continue;
    Poly kg = scalar_of(d.k(g));
    if (!kg.is_zero()) out += pg * kg;
  }
  return out;
}

inline void add_signed(ModuleElement& out, const Poly& f, const ModuleElement& v, bool neg) {
  for (std::size_t a = 0; a < v.coeffs().size(); ++a) {
    if (v[a].is_zero()) continue;
    if (neg) {
      out[a] -= f * v[a];
    } else {
      out[a] += f * v[a];
    }
  }
}

// D(y) for a degree 2 view: sum_a y_a D(e_a) + sigma_D(y_a) e_a.
inline void apply2(const View& d, const ModuleElement& y, bool neg, ModuleElement& out) {
  const MetricModule& m = *d.mod;
  if (d.is_zero()) return;
  for (std::size_t a = 0; a < m.rank(); ++a) {
    if (y[a].is_zero()) continue;
    View da = d.insert(static_cast<std::uint8_t>(a));
    if (!da.is_zero()) add_signed(out, y[a], *da.vec, neg);
    Poly s = sigma2(d, y[a]);
    if (!s.is_zero()) neg ? out[a] -= s : out[a] += s;
  }
}

inline ModuleElement apply2(const View& d, const ModuleElement& y) {
  ModuleElement out(*d.mod);
  apply2(d, y, false, out);
  return out;
}

// sum_g d_g(a) [view, x_g] for a degree 3 view.
inline void derive3(const View& l, const Poly& a, bool neg, ModuleElement& out) {
  for (std::size_t g = 0; g < l.mod->backend().ngens(); ++g) {
    Poly pg = a.partial(g);
    if (pg.is_zero()) continue;
    View kv = l.k(g);
    if (!kv.is_zero()) add_signed(out, pg, *kv.vec, neg);
  }
}

// Adds (-1)^neg i_{x_k} ... i_{x_1} [L, R] to out; the result has degree 1.
// Uses i_x [L, R] = (-1)^{deg R} [i_x L, R] + [L, i_x R].
inline void bracket_acc(const View& l, const View& r, const std::uint8_t* xs, int nx, bool neg, ModuleElement& out) {
  if (l.is_zero() || r.is_zero()) return;
  if (nx == 0) {
    if (l.deg == 3 && r.deg == 0) return derive3(l, r.scalar, neg, out);
    if (l.deg == 0 && r.deg == 3) return derive3(r, l.scalar, !neg, out);
    if (l.deg == 2 && r.deg == 1) return apply2(l, *r.vec, neg, out);
    if (l.deg == 1 && r.deg == 2) return apply2(r, *l.vec, !neg, out);
    throw std::logic_error("bracket recursion reached an impossible degree pair");
  }
  bracket_acc(l.insert(xs[0]), r, xs + 1, nx - 1, neg != (r.deg % 2 != 0), out);
  bracket_acc(l, r.insert(xs[0]), xs + 1, nx - 1, neg, out);
}

// Same recursion for the wedge, with base case a ^ y = a y.
inline void wedge_acc(const View& l, const View& r, const std::uint8_t* xs, int nx, bool neg, ModuleElement& out) {
  if (l.is_zero() || r.is_zero()) return;
  if (nx == 0) {
    if (l.deg == 0 && r.deg == 1) return add_signed(out, l.scalar, *r.vec, neg);
    if (l.deg == 1 && r.deg == 0) return add_signed(out, r.scalar, *l.vec, neg);
    throw std::logic_error("wedge recursion reached an impossible degree pair");
  }
  wedge_acc(l.insert(xs[0]), r, xs + 1, nx - 1, neg != (r.deg % 2 != 0), out);
  wedge_acc(l, r.insert(xs[0]), xs + 1, nx - 1, neg, out);
}

inline ModuleElement bracket_vec(const View& l, const View& r, const std::uint8_t* xs, int nx) {
  ModuleElement out(*l.mod);
  bracket_acc(l, r, xs, nx, false, out);
  return out;
}

inline ModuleElement wedge_vec(const View& l, const View& r, const std::uint8_t* xs, int nx) {
  ModuleElement out(*l.mod);
  wedge_acc(l, r, xs, nx, false, out);
  return out;
}

inline void check_pair(const CMap& a, const CMap& b) {
  if (a.module_ptr() != b.module_ptr()) throw ModuleMismatch("module mismatch between C(E) elements");
}

}  // namespace detail

/// The graded Lie bracket of degree -2.
inline CMap cmap_bracket(const CMap& c1, const CMap& c2) {
  detail::check_pair(c1, c2);
  const MetricModule& m = c1.module();
  const int r = c1.degree(), s = c2.degree(), n = r + s - 2;
  if (n < 0) throw std::invalid_argument("bracket of elements of degree " + std::to_string(r) + " and " +
                                         std::to_string(s) + " lands in negative degree");
  if (r + s > kMaxBracketInput + 2) throw std::invalid_argument("bracket degree cap exceeded");
  using detail::View;
  View l = View::of(c1), rv = View::of(c2);
  if (n == 0) {
    if (r == 1) return CMap::scalar(m, inner(c1.vector_value(), c2.vector_value()));
    if (r == 2) return CMap::scalar(m, detail::sigma2(l, c2.scalar_value()));
    return CMap::scalar(m, -detail::sigma2(rv, c1.scalar_value()));
  }
  if (n == 1) return CMap::vector(detail::bracket_vec(l, rv, nullptr, 0));
  CMap out = CMap::zero(m, n);
  std::vector<std::size_t> t(n - 1, 0);
  std::array<std::uint8_t, kMaxCDegree> xs{};
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    for (int k = 0; k < n - 1; ++k) xs[k] = static_cast<std::uint8_t>(t[k]);
    out.value(t) = detail::bracket_vec(l, rv, xs.data(), n - 1);
    out.bump(t);
  }
  for (std::size_t g = 0; g < m.backend().ngens(); ++g) {
    CMap& d = out.dterm(g);
    if (r >= 2) d += cmap_bracket(c1.dterm(g), c2);
    if (s >= 2) d += cmap_bracket(c1, c2.dterm(g));
  }
  return out;
}

/// [a, C] for a function a.
inline CMap cmap_bracket(const Poly& a, const CMap& c) { return cmap_bracket(CMap::scalar(c.module(), a), c); }

/// i_x C = [C, x].
inline CMap insert(const CMap& c, const ModuleElement& x) {
  if (c.degree() < 2) throw std::invalid_argument("insertion needs degree at least 2");
  return cmap_bracket(c, CMap::vector(x));
}

enum class WedgeMode { Recursive, Shuffle };

namespace detail {

// C(e_t) on a basis tuple of length deg-1.
inline ModuleElement basis_value(const CMap& c, const std::uint8_t* t) {
  if (c.degree() == 1) return c.vector_value();
  std::size_t i = 0;
  for (int k = 0; k + 1 < c.degree(); ++k) i = i * c.module().rank() + t[k];
  return c.values()[i];
}

inline Poly basis_omega(const CMap& c, const std::uint8_t* t) {
  return inner_basis(basis_value(c, t), t[c.degree() - 1]);
}

// Sum over subsets S of size p of the n positions, with the sign of the
// shuffle that puts S first: sign * omega_first(t_S) * second(t_{S^c}).
inline ModuleElement shuffle_sum(const CMap& first, const CMap& second, const std::uint8_t* t, int n) {
  const int p = first.degree();
  ModuleElement out(first.module());
  std::vector<int> sel(p);
  std::function<void(int, int)> rec = [&](int k, int start) {
    if (k == p) {
      std::array<std::uint8_t, kMaxCDegree> a{}, b{};
      int ia = 0, ib = 0, inv = 0;
      std::vector<bool> in(n, false);
      for (int q : sel) in[q] = true;
      for (int q = 0; q < n; ++q) (in[q] ? a[ia++] : b[ib++]) = t[q];
      for (int q = 0; q < p; ++q) inv += sel[q] - q;
      Poly w = basis_omega(first, a.data());
      if (w.is_zero()) return;
      ModuleElement v = w * basis_value(second, b.data());
      if (inv % 2) {
        out -= v;
      } else {
        out += v;
      }
      return;
    }
    for (int q = start; q <= n - (p - k); ++q) {
      sel[k] = q;
      rec(k + 1, q + 1);
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace detail

/// The graded commutative product of degree 0.
inline CMap cmap_wedge(const CMap& c1, const CMap& c2, WedgeMode mode = WedgeMode::Recursive) {
  detail::check_pair(c1, c2);
  const MetricModule& m = c1.module();
  const int r = c1.degree(), s = c2.degree(), n = r + s;
  if (r == 0) return c1.scalar_value() * c2;
  if (s == 0) return c2.scalar_value() * c1;
  if (n > kMaxBracketInput) throw std::invalid_argument("wedge degree cap exceeded");
  using detail::View;
  View l = View::of(c1), rv = View::of(c2);
  CMap out = CMap::zero(m, n);
  std::vector<std::size_t> t(n - 1, 0);
  std::array<std::uint8_t, kMaxCDegree> xs{};
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    for (int k = 0; k < n - 1; ++k) xs[k] = static_cast<std::uint8_t>(t[k]);
    if (mode == WedgeMode::Recursive) {
      out.value(t) = detail::wedge_vec(l, rv, xs.data(), n - 1);
    } else {
      ModuleElement a = detail::shuffle_sum(c1, c2, xs.data(), n - 1);
      ModuleElement b = detail::shuffle_sum(c2, c1, xs.data(), n - 1);
      out.value(t) = ((r * s) % 2 ? -a : a) + b;
    }
    out.bump(t);
  }
  for (std::size_t g = 0; g < m.backend().ngens(); ++g) {
    CMap& d = out.dterm(g);
    if (r >= 2) d += cmap_wedge(c1.dterm(g), c2, mode);
    if (s >= 2) d += cmap_wedge(c1, c2.dterm(g), mode);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification

struct CMapReport {
  bool ok = true;
  unsigned depth = 0;
  std::size_t probes = 0;
  std::string message;
};

namespace detail {

inline std::vector<Monomial> probe_monomials(const Backend& b, unsigned depth) {
  std::vector<Monomial> out;
  if (b.is_dual()) {
    if (depth >= 1) out.push_back(Monomial::var(0));
    return out;
  }
  const std::size_t n = b.nvars();
  if (n == 0) return out;
  Monomial cur;
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned left) {
    if (i == n) {
      if (cur.degree() >= 1) out.push_back(cur);
      return;
    }
    for (unsigned e = 0; e <= left; ++e) {
      cur.exp[i] = static_cast<std::uint8_t>(e);
      rec(i + 1, left - e);
    }
    cur.exp[i] = 0;
  };
  rec(0, depth);
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& c) { return grlex_greater(c, a); });
  return out;
}

inline std::string slot_name(const MetricModule& m, const Slot& s) {
  if (s.mono.is_one()) return m.names()[s.basis];
  return monomial_to_string(m.backend(), s.mono) + "*" + m.names()[s.basis];
}

inline std::string slots_name(const MetricModule& m, const Slot* s, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? ", " : "") + slot_name(m, s[i]);
  return "(" + out + ")";
}

// sum_g d_g(<s_i, s_j>) omega_{K_g}(rest).
inline Poly symbol_term(const View& v, const Slot* s, int n, int i, int j, const Slot* rest, int nrest) {
  const Backend& b = v.mod->backend();
  Poly pairing = Poly::monomial(b, s[i].mono * s[j].mono, Rational(1)) * v.mod->g(s[i].basis, s[j].basis);
  Poly out(b);
  (void)n;
  for (std::size_t g = 0; g < b.ngens(); ++g) {
    Poly pg = pairing.partial(g);
    if (pg.is_zero()) continue;
    View kv = v.k(g);
    if (kv.is_zero()) continue;
    out += pg * omega_slots(kv, rest, nrest);
  }
  return out;
}

inline bool verify_rec(const CMap& c, unsigned depth, CMapReport& rep, const std::string& path) {
  const MetricModule& m = c.module();
  const Backend& b = m.backend();
  const int r = c.degree();
  if (r < 2) return true;
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    rep.message = (path.empty() ? "" : "in " + path + ": ") + what;
    return false;
  };
  if (c.values().size() != CMap::table_size(m, r)) return fail("incomplete value table");
  if (c.dterms().size() != b.ngens()) return fail("incomplete symbol table");
  for (std::size_t g = 0; g < b.ngens(); ++g) {
    if (c.dterm(g).degree() != r - 2) return fail("symbol entry has wrong degree");
    if (!verify_rec(c.dterm(g), depth, rep, path + "[C," + b.var(g) + "]")) return false;
  }
  if (b.is_dual() && !(Poly::variable(b, 0) * c.dterm(0)).is_zero())
    return fail("symbol violates the derivation rule on eps*eps = 0");
  if (r >= 4)
    for (std::size_t g = 0; g < b.ngens(); ++g)
      for (std::size_t h = g + 1; h < b.ngens(); ++h)
        if (c.dterm(g).dterm(h) != c.dterm(h).dterm(g))
          return fail("symbol is not symmetric in " + b.var(g) + ", " + b.var(h));

  const auto monos = probe_monomials(b, depth);
  View v = View::of(c);
  std::array<Slot, kMaxCDegree> s{}, t{}, rest{};
  std::vector<std::size_t> tuple(r, 0);

  // Checks both identities for one probe; returns false on the first failure.
  auto check = [&]() -> bool {
    ++rep.probes;
    // derivation rule against the gram, in the last two slots
    t = s;
    std::swap(t[r - 2], t[r - 1]);
    Poly lhs = omega_slots(v, s.data(), r) + omega_slots(v, t.data(), r);
    for (int q = 0; q < r - 2; ++q) rest[q] = s[q];
    Poly rhs = symbol_term(v, s.data(), r, r - 2, r - 1, rest.data(), r - 2);
    if (!(lhs == rhs))
      return fail("derivation identity fails at " + slots_name(m, s.data(), r) + ": " + lhs.to_string() +
                  " != " + rhs.to_string());
    // quasi-antisymmetry between adjacent arguments
    for (int i = 0; i + 2 < r; ++i) {
      t = s;
      std::swap(t[i], t[i + 1]);
      Poly l2 = omega_slots(v, s.data(), r) + omega_slots(v, t.data(), r);
      int k = 0;
      for (int q = 0; q < r; ++q)
        if (q != i && q != i + 1) rest[k++] = s[q];
      Poly r2 = symbol_term(v, s.data(), r, i, i + 1, rest.data(), r - 2);
      if (!(l2 == r2))
        return fail("antisymmetry identity fails in positions " + std::to_string(i + 1) + "," +
                    std::to_string(i + 2) + " at " + slots_name(m, s.data(), r) + ": " + l2.to_string() +
                    " != " + r2.to_string());
    }
    return true;
  };

  do {
    for (int q = 0; q < r; ++q) {
      s[q].basis = static_cast<std::uint8_t>(tuple[q]);
      s[q].mono = Monomial{};
    }
    if (!check()) return false;
    for (int i = 0; i < r; ++i)
      for (const auto& mi : monos) {
        s[i].mono = mi;
        if (!check()) return false;
        for (int j = i + 1; j < r; ++j)
          for (const auto& mj : monos) {
            s[j].mono = mj;
            if (!check()) return false;
            s[j].mono = Monomial{};
          }
        s[i].mono = Monomial{};
      }
  } while (c.bump(tuple));
  return true;
}

}  // namespace detail

/// Default probe depth: 2 * (max coefficient degree + 1).
inline unsigned default_probe_depth(const CMap& c) { return 2 * (c.max_coeff_degree() + 1); }

/// Checks that C is a quasi-Courant element: the symbol entries are
/// themselves valid, symmetric, and the derivation and antisymmetry
/// identities hold on basis tuples with monomial multiples (of degree up to
/// depth) in at most two slots.
inline CMapReport cmap_verify(const CMap& c, int depth = -1) {
  CMapReport rep;
  rep.depth = depth < 0 ? default_probe_depth(c) : static_cast<unsigned>(depth);
  detail::verify_rec(c, rep.depth, rep, "");
  return rep;
}

// ---------------------------------------------------------------------------
// Forms

/// omega_C as a table on basis tuples of length r, with the symbol carried
/// along as forms of degree r-2.
struct CForm {
  const MetricModule* mod = nullptr;
  int r = 0;
  std::vector<Poly> table;  // rank^r entries; a single entry when r = 0
  std::vector<CForm> dterms;

  friend bool operator==(const CForm& a, const CForm& b) {
    if (a.mod != b.mod || a.r != b.r || !(a.table == b.table) || a.dterms.size() != b.dterms.size()) return false;
    for (std::size_t g = 0; g < a.dterms.size(); ++g)
      if (!(a.dterms[g] == b.dterms[g])) return false;
    return true;
  }

  bool is_zero() const {
    for (const auto& p : table)
      if (!p.is_zero()) return false;
    for (const auto& d : dterms)
      if (!d.is_zero()) return false;
    return true;
  }

  const Poly& at(const std::vector<std::size_t>& t) const {
    std::size_t i = 0;
    for (auto a : t) i = i * mod->rank() + a;
    return table.at(i);
  }
};

inline CForm to_form(const CMap& c) {
  CForm f;
  f.mod = c.module_ptr();
  f.r = c.degree();
  const MetricModule& m = c.module();
  if (c.degree() == 0) {
    f.table = {c.scalar_value()};
    return f;
  }
  if (c.degree() == 1) {
    for (std::size_t b = 0; b < m.rank(); ++b) f.table.push_back(inner_basis(c.vector_value(), b));
    return f;
  }
  for (const auto& v : c.values())
    for (std::size_t b = 0; b < m.rank(); ++b) f.table.push_back(inner_basis(v, b));
  for (const auto& d : c.dterms()) f.dterms.push_back(to_form(d));
  return f;
}

inline CMap from_form(const CForm& f) {
  const MetricModule& m = *f.mod;
  const std::size_t k = m.rank();
  if (f.r == 0) {
    if (f.table.size() != 1) throw std::invalid_argument("degree 0 form needs one entry");
    return CMap::scalar(m, f.table[0]);
  }
  std::size_t expect = 1;
  for (int i = 0; i < f.r; ++i) expect *= k;
  if (f.table.size() != expect) throw std::invalid_argument("form table has wrong size");
  auto raise_at = [&](std::size_t base) {
    std::vector<Poly> w(f.table.begin() + base, f.table.begin() + base + k);
    return raise_index(m, w);
  };
  if (f.r == 1) return CMap::vector(raise_at(0));
  std::vector<ModuleElement> values;
  for (std::size_t i = 0; i < expect / k; ++i) values.push_back(raise_at(i * k));
  std::vector<CMap> dterms;
  for (const auto& d : f.dterms) dterms.push_back(from_form(d));
  return CMap::from_tables(m, f.r, std::move(values), std::move(dterms));
}

// ---------------------------------------------------------------------------
// Symbol tower

struct SymbolTower {
  int r = 0;
  // levels[p] maps a sorted p-tuple of generator indices to pi^(p) of degree r-2p
  std::vector<std::map<std::vector<std::size_t>, CForm>> levels;
};

inline SymbolTower symbol_tower(const CForm& omega) {
  CMap c = from_form(omega);
  const Backend& b = c.backend();
  SymbolTower tw;
  tw.r = omega.r;
  std::map<std::vector<std::size_t>, CMap> cur{{{}, c}};
  for (int p = 0; 2 * p <= omega.r; ++p) {
    std::map<std::vector<std::size_t>, CForm> level;
    for (const auto& [gens, x] : cur) level.emplace(gens, to_form(x));
    tw.levels.push_back(std::move(level));
    if (2 * (p + 1) > omega.r) break;
    // every ordering of the generators must give the same iterated symbol
    std::map<std::vector<std::size_t>, CMap> next;
    for (const auto& [gens, x] : cur)
      for (std::size_t g = 0; g < b.ngens(); ++g) {
        std::vector<std::size_t> key = gens;
        key.push_back(g);
        std::sort(key.begin(), key.end());
        const CMap& k = x.dterm(g);
        auto it = next.find(key);
        if (it == next.end()) {
          next.emplace(key, k);
        } else if (it->second != k) {
          throw std::runtime_error("symbol extraction inconsistent: iterated symbol is not symmetric");
        }
        if (b.is_dual() && !(Poly::variable(b, 0) * k).is_zero())
          throw std::runtime_error("symbol extraction inconsistent: eps times the symbol does not vanish");
      }
    cur = std::move(next);
  }
  return tw;
}

// ---------------------------------------------------------------------------
// Push-forward along an isometric bijection

inline CMap cmap_pushforward(const CMap& c, const ModuleMap& phi) {
  phi.require_isometric_bijection();
  if (&phi.source() != c.module_ptr()) throw ModuleMismatch("push-forward along a map from another module");
  const MetricModule& f = phi.target();
  if (c.degree() == 0) return CMap::scalar(f, phi.alg(c.scalar_value()));
  if (c.degree() == 1) return CMap::vector(phi(c.vector_value()));
  const int r = c.degree();
  std::vector<ModuleElement> preimages;
  for (std::size_t b = 0; b < f.rank(); ++b) preimages.push_back(phi.inverse(ModuleElement::basis(f, b)));
  CMap out = CMap::zero(f, r);
  std::vector<std::size_t> t(r - 1, 0);
  do {
    std::vector<ModuleElement> args;
    for (auto a : t) args.push_back(preimages[a]);
    out.value(t) = phi(cmap_eval(c, args));
  } while (out.bump(t));
  for (std::size_t h = 0; h < f.backend().ngens(); ++h)
    out.dterm(h) = cmap_pushforward(c.dterm(phi.inverse_perm()[h]), phi);
  return out;
}

}  // namespace courant
