#pragma once

// The Rothstein algebra Sym_A(Der A) (x)_A Lambda_A(E) with its wedge product,
// the connection-dependent Poisson bracket of degree -2, the connection-change
// isomorphism exp(t), and push-forward along isometries.

#include <functional>
#include <map>

#include "courant/metric_module.hpp"

namespace courant {

/// Sym factors are Der basis indices (sorted, repeats allowed); ext factors are
/// E basis indices (strictly increasing).
struct RothKey {
  std::vector<std::uint8_t> sym;
  std::vector<std::uint8_t> ext;

  int degree() const { return int(2 * sym.size() + ext.size()); }

  friend bool operator==(const RothKey&, const RothKey&) = default;
  friend bool operator<(const RothKey& a, const RothKey& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    if (a.sym.size() != b.sym.size()) return a.sym.size() > b.sym.size();
    if (a.sym != b.sym) return a.sym < b.sym;
    return a.ext < b.ext;
  }
};

class RothElement {
 public:
  RothElement() = default;
  explicit RothElement(const MetricModule& m) : mod_(&m) {}

  static RothElement scalar(const MetricModule& m, const Poly& a) {
    RothElement r(m);
    r.add_term({}, a);
    return r;
  }
  static RothElement vector(const ModuleElement& x) {
    RothElement r(x.module());
    for (std::size_t a = 0; a < x.module().rank(); ++a) r.add_term({{}, {std::uint8_t(a)}}, x[a]);
    return r;
  }
  static RothElement der(const MetricModule& m, const DerElement& d) {
    RothElement r(m);
    for (std::size_t i = 0; i < d.comps().size(); ++i) r.add_term({{std::uint8_t(i)}, {}}, d.comp(i));
    return r;
  }
  static RothElement bivector(const MetricModule& m, const Bivector& xi) {
    RothElement r(m);
    for (std::size_t a = 0; a < m.rank(); ++a)
      for (std::size_t b = a + 1; b < m.rank(); ++b) r.add_term({{}, {std::uint8_t(a), std::uint8_t(b)}}, xi.x[a][b]);
    return r;
  }

  /// coef * d_{sym...} (x) e_{ext...}, with ext given in any order (Koszul sign applied).
  static RothElement monomial(const MetricModule& m, const Poly& coef, std::vector<std::uint8_t> sym,
                              std::vector<std::uint8_t> ext) {
    RothElement r(m);
    for (auto s : sym)
      if (s >= m.backend().ngens()) throw std::out_of_range("derivation index out of range");
    for (auto e : ext)
      if (e >= m.rank()) throw std::out_of_range("module basis index out of range");
    int sign = sort_with_sign(ext);
    if (sign == 0) return r;
    std::sort(sym.begin(), sym.end());
    r.add_term({std::move(sym), std::move(ext)}, sign > 0 ? coef : -coef);
    return r;
  }

  const MetricModule& module() const { return *mod_; }
  const MetricModule* module_ptr() const { return mod_; }
  const std::map<RothKey, Poly>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Degree of a homogeneous element; -1 for zero; throws if inhomogeneous.
  int degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_) {
      if (d >= 0 && k.degree() != d) throw std::invalid_argument("element is not homogeneous");
      d = k.degree();
    }
    return d;
  }

  RothElement part_of_degree(int r) const {
    RothElement out(*mod_);
    for (const auto& [k, c] : terms_)
      if (k.degree() == r) out.terms_.emplace(k, c);
    return out;
  }

  /// Adds c * key, applying the dual-number relations: eps kills every term
  /// with a Der factor, and Der v Der vanishes.
  void add_term(const RothKey& key, const Poly& c) {
    if (c.is_zero()) return;
    Poly coef = c;
    if (mod_->backend().is_dual() && !key.sym.empty()) {
      if (key.sym.size() >= 2) return;
      coef = Poly(mod_->backend(), c.constant_term());
      if (coef.is_zero()) return;
    }
    auto [it, inserted] = terms_.try_emplace(key, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  friend bool operator==(const RothElement& a, const RothElement& b) { return a.terms_ == b.terms_; }

  RothElement& operator+=(const RothElement& o) {
    same(o);
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  RothElement& operator-=(const RothElement& o) {
    same(o);
    for (const auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
  }
  friend RothElement operator+(RothElement a, const RothElement& b) { return a += b; }
  friend RothElement operator-(RothElement a, const RothElement& b) { return a -= b; }
  RothElement operator-() const {
    RothElement r(*mod_);
    for (const auto& [k, c] : terms_) r.terms_.emplace(k, -c);
    return r;
  }
  friend RothElement operator*(const Poly& f, const RothElement& x) {
    RothElement r(*x.mod_);
    for (const auto& [k, c] : x.terms_) r.add_term(k, f * c);
    return r;
  }
  friend RothElement operator*(const Rational& q, const RothElement& x) {
    RothElement r(*x.mod_);
    if (sgn(q) == 0) return r;
    for (const auto& [k, c] : x.terms_) r.terms_.emplace(k, c * q);
    return r;
  }

  std::string to_string() const;

  /// Sorts ext indices, returning the permutation sign, or 0 on a repeat.
  static int sort_with_sign(std::vector<std::uint8_t>& v) {
    int sign = 1;
    for (std::size_t i = 1; i < v.size(); ++i)
      for (std::size_t j = i; j > 0 && v[j - 1] >= v[j]; --j) {
        if (v[j - 1] == v[j]) return 0;
        std::swap(v[j - 1], v[j]);
        sign = -sign;
      }
    return sign;
  }

  void same(const RothElement& o) const {
    if (mod_ != o.mod_) throw ModuleMismatch("Rothstein elements over different modules");
  }

 private:
  const MetricModule* mod_ = nullptr;
  std::map<RothKey, Poly> terms_;
};

inline RothElement wedge(const RothElement& a, const RothElement& b) {
  a.same(b);
  RothElement r(a.module());
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms()) {
      RothKey k;
      k.sym = ka.sym;
      k.sym.insert(k.sym.end(), kb.sym.begin(), kb.sym.end());
      std::sort(k.sym.begin(), k.sym.end());
      k.ext = ka.ext;
      k.ext.insert(k.ext.end(), kb.ext.begin(), kb.ext.end());
      int s = RothElement::sort_with_sign(k.ext);
      if (s == 0) continue;
      Poly c = ca * cb;
      r.add_term(k, s > 0 ? c : -c);
    }
  return r;
}

inline std::string RothElement::to_string() const {
  if (terms_.empty()) return "0";
  const Backend& b = mod_->backend();
  std::string s;
  for (const auto& [k, c] : terms_) {
    if (!s.empty()) s += " + ";
    s += "(" + c.to_string() + ")";
    if (!k.sym.empty()) {
      s += " * ";
      for (std::size_t i = 0; i < k.sym.size(); ++i)
        s += (i ? "∨" : "") + std::string("d(") + (b.is_dual() ? b.var(0) : b.var(k.sym[i])) + ")";
    }
    if (!k.ext.empty()) {
      s += k.sym.empty() ? " * " : " ⊗ ";
      for (std::size_t i = 0; i < k.ext.size(); ++i) s += (i ? "∧" : "") + mod_->names()[k.ext[i]];
    }
  }
  return s;
}

/// The Rothstein Poisson bracket for a fixed metric connection.
class RothBracket {
 public:
  explicit RothBracket(const Connection& c) : conn_(c), curv_(c) {
    const MetricModule& m = c.module();
    std::size_t n = m.backend().ngens();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<RothElement> row;
      for (std::size_t a = 0; a < m.rank(); ++a) row.push_back(-RothElement::vector(c.gamma(i, a)));
      d_e_.push_back(std::move(row));
      std::vector<RothElement> rr;
      for (std::size_t j = 0; j < n; ++j) rr.push_back(-RothElement::bivector(m, curv_.r(i, j)));
      d_d_.push_back(std::move(rr));
    }
  }

  const Connection& connection() const { return conn_; }
  const Curvature& curvature() const { return curv_; }
  const MetricModule& module() const { return conn_.module(); }

  RothElement operator()(const RothElement& u, const RothElement& v) const {
    u.same(v);
    if (u.module_ptr() != &conn_.module()) throw ModuleMismatch("bracket connection lives on a different module");
    RothElement out(module());
    for (const auto& [ku, cu] : u.terms())
      for (const auto& [kv, cv] : v.terms()) bracket_terms(ku, cu, kv, cv, out);
    return out;
  }

 private:
  // Factor f of a term: kind 0 = coefficient, 1 = Der basis index, 2 = E basis index.
  struct Factor {
    int kind;
    std::size_t idx;
  };

  static std::vector<Factor> factors(const RothKey& k) {
    std::vector<Factor> f{{0, 0}};
    for (auto s : k.sym) f.push_back({1, s});
    for (auto e : k.ext) f.push_back({2, e});
    return f;
  }

  // Term with factor `skip` removed (coefficient replaced by 1 if skip == 0).
  RothElement rest(const RothKey& k, const Poly& c, std::size_t skip) const {
    const MetricModule& m = module();
    RothKey r;
    std::size_t pos = 1;
    for (auto s : k.sym) {
      if (pos++ != skip) r.sym.push_back(s);
    }
    for (auto e : k.ext) {
      if (pos++ != skip) r.ext.push_back(e);
    }
    RothElement out(m);
    out.add_term(r, skip == 0 ? Poly(m.backend(), 1) : c);
    return out;
  }

  RothElement generator_bracket(const Factor& f, const Poly& cf, const Factor& h, const Poly& ch) const {
    const MetricModule& m = module();
    const Backend& b = m.backend();
    RothElement zero(m);
    if (f.kind == 0) {
      if (h.kind == 1) return RothElement::scalar(m, apply_basis_der(b, h.idx, cf));
      return zero;
    }
    if (f.kind == 1) {
      if (h.kind == 0) return RothElement::scalar(m, -apply_basis_der(b, f.idx, ch));
      if (h.kind == 1) return d_d_[f.idx][h.idx];
      return d_e_[f.idx][h.idx];
    }
    if (h.kind == 2) return RothElement::scalar(m, m.g(f.idx, h.idx));
    if (h.kind == 1) return -d_e_[h.idx][f.idx];
    return zero;
  }

  void bracket_terms(const RothKey& ku, const Poly& cu, const RothKey& kv, const Poly& cv, RothElement& out) const {
    auto fu = factors(ku), fv = factors(kv);
    for (std::size_t i = 0; i < fu.size(); ++i) {
      // moving an odd factor to the end of u passes the odd factors after it
      int s1 = 1;
      if (fu[i].kind == 2)
        for (std::size_t k = i + 1; k < fu.size(); ++k)
          if (fu[k].kind == 2) s1 = -s1;
      for (std::size_t j = 0; j < fv.size(); ++j) {
        if (fu[i].kind == 0 && fv[j].kind != 1) continue;
        if (fu[i].kind != 1 && fv[j].kind == 0) continue;
        if (fu[i].kind == 2 && fv[j].kind == 0) continue;
        RothElement g = generator_bracket(fu[i], cu, fv[j], cv);
        if (g.is_zero()) continue;
        int s2 = 1;
        if (fv[j].kind == 2)
          for (std::size_t k = 0; k < j; ++k)
            if (fv[k].kind == 2) s2 = -s2;
        RothElement t = wedge(wedge(rest(ku, cu, i), g), rest(kv, cv, j));
        if (s1 * s2 < 0) {
          out -= t;
        } else {
          out += t;
        }
      }
    }
  }

  Connection conn_;
  Curvature curv_;
  std::vector<std::vector<RothElement>> d_e_;  // {d_i, e_a} = -Gamma_ia
  std::vector<std::vector<RothElement>> d_d_;  // {d_i, d_j} = -r_ij
};

/// The degree-zero derivation t of the wedge product induced by two metric
/// connections: <t(D), x^y> = <(nabla_D - nabla'_D) x, y>.
class ConnectionChange {
 public:
  ConnectionChange(const Connection& from, const Connection& to) : mod_(&from.module()) {
    if (&to.module() != mod_) throw ModuleMismatch("connections on different modules");
    if (!from.is_metric() || !to.is_metric()) throw std::invalid_argument("connection change requires metric connections");
    const MetricModule& m = *mod_;
    for (std::size_t i = 0; i < m.backend().ngens(); ++i) {
      PolyMatrix form(m.rank(), std::vector<Poly>(m.rank()));
      for (std::size_t a = 0; a < m.rank(); ++a)
        for (std::size_t d = 0; d < m.rank(); ++d) form[a][d] = inner_basis(from.gamma(i, a) - to.gamma(i, a), d);
      Bivector t = Bivector::from_form(m, form);
      t_.push_back(RothElement::bivector(m, t));
      bivectors_.push_back(std::move(t));
    }
  }

  const std::vector<Bivector>& tensors() const { return bivectors_; }

  RothElement apply_t(const RothElement& x) const {
    RothElement out(*mod_);
    for (const auto& [k, c] : x.terms()) {
      for (std::size_t p = 0; p < k.sym.size(); ++p) {
        if (p > 0 && k.sym[p] == k.sym[p - 1]) continue;
        std::size_t mult = std::count(k.sym.begin(), k.sym.end(), k.sym[p]);
        RothKey r = k;
        r.sym.erase(r.sym.begin() + p);
        RothElement base(*mod_);
        base.add_term(r, c * Rational(long(mult)));
        out += wedge(base, t_[k.sym[p]]);
      }
    }
    return out;
  }

  /// exp(t) = sum t^n / n!; the series stops because t lowers the Sym degree.
  RothElement exp(const RothElement& x) const {
    RothElement out = x, cur = x;
    for (long n = 1; !cur.is_zero(); ++n) {
      cur = Rational(1, n) * apply_t(cur);
      out += cur;
    }
    return out;
  }

 private:
  const MetricModule* mod_;
  std::vector<RothElement> t_;
  std::vector<Bivector> bivectors_;
};

/// A semilinear module map G: E -> F along the algebra isomorphism
/// g(x_i) = x_{perm[i]}; column a of `matrix` is G(e_a) in F coordinates.
class ModuleMap {
 public:
  ModuleMap(const MetricModule& src, const MetricModule& dst, std::vector<std::size_t> perm, PolyMatrix matrix)
      : src_(&src), dst_(&dst), perm_(std::move(perm)), mat_(std::move(matrix)) {
    const Backend& b = src.backend();
    if (&dst.backend() != &b) throw BackendMismatch("module map between different coefficient algebras");
    if (perm_.empty()) {
      perm_.resize(b.nvars());
      std::iota(perm_.begin(), perm_.end(), 0);
    }
    std::vector<std::size_t> chk = perm_;
    std::sort(chk.begin(), chk.end());
    for (std::size_t i = 0; i < chk.size(); ++i)
      if (chk[i] != i || chk.size() != b.nvars()) throw std::invalid_argument("algebra map must be a variable permutation");
    if (b.is_dual() && perm_[0] != 0) throw std::invalid_argument("only the identity is supported over the dual numbers");
    if (mat_.size() != dst.rank()) throw std::invalid_argument("module map matrix has wrong number of rows");
    for (auto& row : mat_) {
      if (row.size() != src.rank()) throw std::invalid_argument("module map matrix has wrong number of columns");
      for (auto& p : row) p = p + Poly(b);
    }
    inv_perm_.resize(perm_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) inv_perm_[perm_[i]] = i;
  }

  static ModuleMap identity(const MetricModule& m) {
    PolyMatrix id(m.rank(), std::vector<Poly>(m.rank(), Poly(m.backend())));
    for (std::size_t a = 0; a < m.rank(); ++a) id[a][a] = Poly(m.backend(), 1);
    return ModuleMap(m, m, {}, id);
  }

  const MetricModule& source() const { return *src_; }
  const MetricModule& target() const { return *dst_; }
  const std::vector<std::size_t>& perm() const { return perm_; }
  const std::vector<std::size_t>& inverse_perm() const { return inv_perm_; }
  const PolyMatrix& matrix() const { return mat_; }

  Poly alg(const Poly& a) const { return a.permute_vars(perm_); }
  Poly alg_inverse(const Poly& a) const { return a.permute_vars(inv_perm_); }

  ModuleElement operator()(const ModuleElement& x) const {
    ModuleElement y(*dst_);
    for (std::size_t a = 0; a < src_->rank(); ++a) {
      if (x[a].is_zero()) continue;
      Poly ga = alg(x[a]);
      for (std::size_t b = 0; b < dst_->rank(); ++b)
        if (!mat_[b][a].is_zero()) y[b] += ga * mat_[b][a];
    }
    return y;
  }

  bool is_isometric() const {
    if (src_->rank() != dst_->rank()) return false;
    for (std::size_t a = 0; a < src_->rank(); ++a)
      for (std::size_t b = 0; b < src_->rank(); ++b) {
        ModuleElement ga = (*this)(ModuleElement::basis(*src_, a));
        ModuleElement gb = (*this)(ModuleElement::basis(*src_, b));
        if (!(alg(src_->g(a, b)) == inner(ga, gb))) return false;
      }
    return true;
  }

  /// H = G^{-1}; requires bijectivity (the matrix determinant is a unit).
  ModuleElement inverse(const ModuleElement& y) const {
    ensure_inverse();
    ModuleElement x(*src_);
    for (std::size_t b = 0; b < dst_->rank(); ++b) {
      if (y[b].is_zero()) continue;
      for (std::size_t a = 0; a < src_->rank(); ++a)
        if (!inv_[a][b].is_zero()) x[a] += alg_inverse(inv_[a][b] * y[b]);
    }
    return x;
  }

  void require_isometric_bijection() const {
    if (src_->rank() != dst_->rank()) throw std::invalid_argument("module map is not bijective (rank mismatch)");
    if (!is_isometric()) throw std::invalid_argument("module map is not isometric");
    ensure_inverse();
  }

 private:
  void ensure_inverse() const {
    if (!inv_.empty()) return;
    try {
      inv_ = inverse_unit_det(mat_, src_->backend());
    } catch (const std::domain_error&) {
      throw std::invalid_argument("module map is not bijective");
    }
  }

  const MetricModule* src_;
  const MetricModule* dst_;
  std::vector<std::size_t> perm_, inv_perm_;
  PolyMatrix mat_;
  mutable PolyMatrix inv_;
};

/// nabla'_{B_j} y = G(nabla_{g^* B_j} H(y)), the connection transported along G.
inline Connection transport_connection(const Connection& c, const ModuleMap& g) {
  g.require_isometric_bijection();
  const MetricModule& f = g.target();
  std::size_t n = f.backend().ngens();
  std::vector<std::vector<ModuleElement>> gamma(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t src_gen = f.backend().is_dual() ? 0 : g.inverse_perm()[j];
    for (std::size_t b = 0; b < f.rank(); ++b)
      gamma[j].push_back(g(c.covariant(src_gen, g.inverse(ModuleElement::basis(f, b)))));
  }
  return Connection(f, std::move(gamma));
}

/// G_*: R(E) -> R(F), a Poisson morphism from the bracket of `source_conn` to
/// the bracket of `target_conn`.
inline RothElement roth_pushforward(const RothElement& phi, const ModuleMap& g, const Connection& source_conn,
                                    const Connection& target_conn) {
  if (phi.module_ptr() != &g.source()) throw ModuleMismatch("element does not live on the source module");
  if (&target_conn.module() != &g.target()) throw ModuleMismatch("target connection lives on a different module");
  Connection moved = transport_connection(source_conn, g);
  const MetricModule& f = g.target();
  const Backend& b = f.backend();
  RothElement naive(f);
  for (const auto& [k, c] : phi.terms()) {
    RothElement t = RothElement::scalar(f, g.alg(c));
    for (auto s : k.sym) {
      std::size_t img = b.is_dual() ? s : g.perm()[s];
      t = wedge(t, RothElement::der(f, DerElement::basis(b, img)));
    }
    for (auto e : k.ext) t = wedge(t, RothElement::vector(g(ModuleElement::basis(g.source(), e))));
    naive += t;
  }
  return ConnectionChange(moved, target_conn).exp(naive);
}

}  // namespace courant
