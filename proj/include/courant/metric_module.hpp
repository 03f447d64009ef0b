#pragma once

// Free modules E = A^m with a symmetric inner product of unit determinant,
// connections given by Christoffel tables, and curvature.

#include <deque>
#include <memory>
#include <mutex>

#include "courant/derivation.hpp"
#include "courant/linalg.hpp"

namespace courant {

class ModuleMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MetricModule {
 public:
  /// Validates and interns a module. Basis weights feed the internal grading
  /// used by the cohomology blocks; they default to zero.
  static const MetricModule& make(const Backend& b, std::vector<std::string> names, PolyMatrix gram,
                                  std::vector<int> weights = {}) {
    const std::size_t m = names.size();
    if (m == 0) throw std::invalid_argument("module rank must be positive");
    if (gram.size() != m) throw std::invalid_argument("gram matrix has wrong number of rows");
    for (auto& row : gram) {
      if (row.size() != m) throw std::invalid_argument("gram matrix is not square");
      for (auto& g : row) {
        if (g.backend() && g.backend() != &b) throw BackendMismatch("gram entry over a different backend");
        g = g + Poly(b);
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (!(gram[i][j] == gram[j][i]))
          throw std::invalid_argument("gram matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + ")");
    if (weights.empty()) weights.assign(m, 0);
    if (weights.size() != m) throw std::invalid_argument("one weight per basis element required");
    Poly det = determinant(gram, b);
    PolyMatrix inv;
    try {
      inv = inverse_unit_det(gram, b);
    } catch (const std::domain_error&) {
      throw std::invalid_argument("gram determinant " + det.to_string() + " is not a unit of " + b.describe());
    }
    static std::mutex mu;
    static std::deque<MetricModule> pool;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& mod : pool)
      if (mod.backend_ == &b && mod.names_ == names && mod.gram_ == gram && mod.weights_ == weights) return mod;
    pool.push_back(MetricModule(b, std::move(names), std::move(gram), std::move(inv), std::move(weights)));
    return pool.back();
  }

  static std::vector<std::string> default_names(std::size_t m) {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < m; ++i) n.push_back("e" + std::to_string(i + 1));
    return n;
  }

  const Backend& backend() const { return *backend_; }
  std::size_t rank() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const PolyMatrix& gram() const { return gram_; }
  const PolyMatrix& gram_inverse() const { return inv_; }
  const Poly& g(std::size_t a, std::size_t b) const { return gram_[a][b]; }
  const Poly& ginv(std::size_t a, std::size_t b) const { return inv_[a][b]; }
  const std::vector<int>& weights() const { return weights_; }

  int basis_index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    return -1;
  }

  bool constant_gram() const {
    for (const auto& row : gram_)
      for (const auto& g : row)
        if (!g.is_constant()) return false;
    return true;
  }

 private:
  MetricModule(const Backend& b, std::vector<std::string> n, PolyMatrix g, PolyMatrix inv, std::vector<int> w)
      : backend_(&b), names_(std::move(n)), gram_(std::move(g)), inv_(std::move(inv)), weights_(std::move(w)) {}

  const Backend* backend_;
  std::vector<std::string> names_;
  PolyMatrix gram_;
  PolyMatrix inv_;
  std::vector<int> weights_;
};

class ModuleElement {
 public:
  ModuleElement() = default;
  explicit ModuleElement(const MetricModule& m) : mod_(&m), c_(m.rank(), Poly(m.backend())) {}
  ModuleElement(const MetricModule& m, std::vector<Poly> coeffs) : mod_(&m), c_(std::move(coeffs)) {
    if (c_.size() != m.rank()) throw std::invalid_argument("module element needs one coefficient per basis element");
    for (auto& p : c_) p = p + Poly(m.backend());
  }

  static ModuleElement basis(const MetricModule& m, std::size_t a, const Poly& coeff) {
    ModuleElement x(m);
    x.c_.at(a) = coeff + Poly(m.backend());
    return x;
  }
  static ModuleElement basis(const MetricModule& m, std::size_t a) { return basis(m, a, Poly(m.backend(), 1)); }

  const MetricModule& module() const { return *mod_; }
  const MetricModule* module_ptr() const { return mod_; }
  const std::vector<Poly>& coeffs() const { return c_; }
  const Poly& operator[](std::size_t a) const { return c_[a]; }
  Poly& operator[](std::size_t a) { return c_[a]; }

  bool is_zero() const {
    for (const auto& p : c_)
      if (!p.is_zero()) return false;
    return true;
  }

  friend bool operator==(const ModuleElement& a, const ModuleElement& b) { return a.c_ == b.c_; }

  ModuleElement& operator+=(const ModuleElement& o) {
    same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  ModuleElement& operator-=(const ModuleElement& o) {
    same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend ModuleElement operator+(ModuleElement a, const ModuleElement& b) { return a += b; }
  friend ModuleElement operator-(ModuleElement a, const ModuleElement& b) { return a -= b; }
  ModuleElement operator-() const {
    ModuleElement r = *this;
    for (auto& p : r.c_) p = -p;
    return r;
  }
  friend ModuleElement operator*(const Poly& f, ModuleElement x) {
    for (auto& p : x.c_) p = f * p;
    return x;
  }
  friend ModuleElement operator*(const Rational& q, ModuleElement x) {
    for (auto& p : x.c_) p *= q;
    return x;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t a = 0; a < c_.size(); ++a) {
      if (c_[a].is_zero()) continue;
      if (!s.empty()) s += " + ";
      if (c_[a] == Poly(mod_->backend(), 1)) {
        s += mod_->names()[a];
      } else {
        s += "(" + c_[a].to_string() + ")*" + mod_->names()[a];
      }
    }
    return s.empty() ? "0" : s;
  }

 private:
  void same(const ModuleElement& o) const {
    if (mod_ != o.mod_) throw ModuleMismatch("module mismatch");
  }

  const MetricModule* mod_ = nullptr;
  std::vector<Poly> c_;
};

inline Poly inner(const ModuleElement& x, const ModuleElement& y) {
  if (x.module_ptr() != y.module_ptr()) throw ModuleMismatch("inner product of elements of different modules");
  const MetricModule& m = x.module();
  Poly r(m.backend());
  for (std::size_t a = 0; a < m.rank(); ++a) {
    if (x[a].is_zero()) continue;
    for (std::size_t b = 0; b < m.rank(); ++b)
      if (!y[b].is_zero() && !m.g(a, b).is_zero()) r += x[a] * m.g(a, b) * y[b];
  }
  return r;
}

/// <x, e_b>.
inline Poly inner_basis(const ModuleElement& x, std::size_t b) {
  const MetricModule& m = x.module();
  Poly r(m.backend());
  for (std::size_t a = 0; a < m.rank(); ++a)
    if (!x[a].is_zero() && !m.g(a, b).is_zero()) r += x[a] * m.g(a, b);
  return r;
}

/// The element y with <y, e_b> = w_b for all b.
inline ModuleElement raise_index(const MetricModule& m, const std::vector<Poly>& w) {
  ModuleElement y(m);
  for (std::size_t b = 0; b < m.rank(); ++b) {
    if (w[b].is_zero()) continue;
    for (std::size_t c = 0; c < m.rank(); ++c)
      if (!m.ginv(b, c).is_zero()) y[c] += w[b] * m.ginv(b, c);
  }
  return y;
}

/// Pairs (x_i, y_i) with sum <x_i, y_i> = 1, read off the inverse gram.
inline std::vector<std::pair<ModuleElement, ModuleElement>> fullness_witness(const MetricModule& m) {
  std::vector<Poly> row(m.rank());
  for (std::size_t b = 0; b < m.rank(); ++b) row[b] = m.ginv(0, b);
  return {{ModuleElement::basis(m, 0), ModuleElement(m, row)}};
}

/// Elements of Lambda^2 E stored as an antisymmetric coefficient matrix X with
/// xi = sum_{a<b} X_ab e_a ^ e_b. The pairing with x ^ y is the determinant
/// pairing <xi, x^y> = sum_{a,b} X_ab <e_a,x><e_b,y>.
struct Bivector {
  PolyMatrix x;

  static Bivector zero(const MetricModule& m) {
    return {PolyMatrix(m.rank(), std::vector<Poly>(m.rank(), Poly(m.backend())))};
  }

  /// Coefficient matrix of u ^ v.
  static Bivector wedge(const ModuleElement& u, const ModuleElement& v) {
    const MetricModule& m = u.module();
    Bivector r = zero(m);
    for (std::size_t a = 0; a < m.rank(); ++a)
      for (std::size_t b = 0; b < m.rank(); ++b) r.x[a][b] = u[a] * v[b] - u[b] * v[a];
    return r;
  }

  /// The bivector whose determinant pairing reproduces the antisymmetric
  /// bilinear form with basis values form[c][d].
  static Bivector from_form(const MetricModule& m, const PolyMatrix& form) {
    const Backend& b = m.backend();
    return {matmul(matmul(m.gram_inverse(), form, b), m.gram_inverse(), b)};
  }

  Poly pair(const ModuleElement& u, const ModuleElement& v) const {
    const MetricModule& m = u.module();
    std::vector<Poly> pu(m.rank()), pv(m.rank());
    for (std::size_t a = 0; a < m.rank(); ++a) {
      pu[a] = inner_basis(u, a);
      pv[a] = inner_basis(v, a);
    }
    Poly r(m.backend());
    for (std::size_t a = 0; a < m.rank(); ++a)
      for (std::size_t c = 0; c < m.rank(); ++c)
        if (!x[a][c].is_zero()) r += x[a][c] * pu[a] * pv[c];
    return r;
  }

  bool is_zero() const {
    for (const auto& row : x)
      for (const auto& p : row)
        if (!p.is_zero()) return false;
    return true;
  }

  friend bool operator==(const Bivector& a, const Bivector& b) { return a.x == b.x; }
  friend Bivector operator+(Bivector a, const Bivector& b) {
    for (std::size_t i = 0; i < a.x.size(); ++i)
      for (std::size_t j = 0; j < a.x.size(); ++j) a.x[i][j] += b.x[i][j];
    return a;
  }
  friend Bivector operator-(Bivector a, const Bivector& b) {
    for (std::size_t i = 0; i < a.x.size(); ++i)
      for (std::size_t j = 0; j < a.x.size(); ++j) a.x[i][j] -= b.x[i][j];
    return a;
  }
  friend Bivector operator*(const Poly& f, Bivector a) {
    for (auto& row : a.x)
      for (auto& p : row) p = f * p;
    return a;
  }
};

/// Connection on E given by Gamma[i][a] = nabla_{B_i} e_a, where B_i runs over
/// the basis of Der(A) (d/dx_i, or eps d/deps for the dual numbers).
class Connection {
 public:
  Connection(const MetricModule& m, std::vector<std::vector<ModuleElement>> gamma)
      : mod_(&m), gamma_(std::move(gamma)) {
    const Backend& b = m.backend();
    if (gamma_.size() != b.ngens()) throw std::invalid_argument("connection table needs one row per derivation generator");
    for (auto& row : gamma_) {
      if (row.size() != m.rank()) throw std::invalid_argument("connection table row has wrong length");
      for (auto& v : row)
        if (v.module_ptr() != &m) throw ModuleMismatch("connection value lies in a different module");
    }
    if (b.is_dual()) {
      // nabla_{eps D} = eps nabla_D and eps*(eps d/deps) = 0 force Gamma in eps*E
      Poly eps = Poly::variable(b, 0);
      for (const auto& row : gamma_)
        for (const auto& v : row)
          if (!(eps * v).is_zero())
            throw std::invalid_argument("over the dual numbers the Christoffel values must lie in eps*E");
    }
  }

  static Connection flat(const MetricModule& m) {
    return Connection(m, std::vector<std::vector<ModuleElement>>(m.backend().ngens(),
                                                                 std::vector<ModuleElement>(m.rank(), ModuleElement(m))));
  }

  const MetricModule& module() const { return *mod_; }
  const std::vector<std::vector<ModuleElement>>& gamma() const { return gamma_; }
  const ModuleElement& gamma(std::size_t i, std::size_t a) const { return gamma_[i][a]; }

  /// nabla_{B_i} x.
  ModuleElement covariant(std::size_t i, const ModuleElement& x) const {
    const Backend& b = mod_->backend();
    ModuleElement r(*mod_);
    for (std::size_t a = 0; a < mod_->rank(); ++a) {
      if (x[a].is_zero()) continue;
      r[a] += apply_basis_der(b, i, x[a]);
      if (!gamma_[i][a].is_zero()) r += x[a] * gamma_[i][a];
    }
    return r;
  }

  ModuleElement covariant(const DerElement& d, const ModuleElement& x) const {
    ModuleElement r(*mod_);
    for (std::size_t i = 0; i < d.comps().size(); ++i)
      if (!d.comp(i).is_zero()) r += d.comp(i) * covariant(i, x);
    return r;
  }

  /// First failing (generator, a, b) of D<e_a,e_b> = <nabla e_a, e_b> + <e_a, nabla e_b>, if any.
  std::optional<std::array<std::size_t, 3>> metricity_violation() const {
    const Backend& b = mod_->backend();
    for (std::size_t i = 0; i < b.ngens(); ++i)
      for (std::size_t a = 0; a < mod_->rank(); ++a)
        for (std::size_t c = 0; c < mod_->rank(); ++c) {
          Poly lhs = apply_basis_der(b, i, mod_->g(a, c));
          Poly rhs = inner_basis(gamma_[i][a], c) + inner_basis(gamma_[i][c], a);
          if (!(lhs == rhs)) return std::array<std::size_t, 3>{i, a, c};
        }
    return std::nullopt;
  }
  bool is_metric() const { return !metricity_violation().has_value(); }

  friend bool operator==(const Connection& a, const Connection& b) {
    return a.mod_ == b.mod_ && a.gamma_ == b.gamma_;
  }

 private:
  const MetricModule* mod_;
  std::vector<std::vector<ModuleElement>> gamma_;
};

/// <nabla_D x, y> = 1/2 (<nabla~_D x, y> - <x, nabla~_D y> + D<x, y>).
inline Connection metrize(const Connection& c) {
  const MetricModule& m = c.module();
  const Backend& b = m.backend();
  Rational half(1, 2);
  std::vector<std::vector<ModuleElement>> g(b.ngens(), std::vector<ModuleElement>(m.rank(), ModuleElement(m)));
  for (std::size_t i = 0; i < b.ngens(); ++i)
    for (std::size_t a = 0; a < m.rank(); ++a) {
      std::vector<Poly> w(m.rank());
      for (std::size_t d = 0; d < m.rank(); ++d)
        w[d] = half * (inner_basis(c.gamma(i, a), d) - inner_basis(c.gamma(i, d), a) + apply_basis_der(b, i, m.g(a, d)));
      g[i][a] = raise_index(m, w);
    }
  return Connection(m, std::move(g));
}

/// Curvature operator R(B_i, B_j) on basis vectors: column a is R e_a.
/// Basis derivations commute for both backends, so the [D,E] term drops.
inline std::vector<ModuleElement> curvature_operator(const Connection& c, std::size_t i, std::size_t j) {
  const MetricModule& m = c.module();
  std::vector<ModuleElement> cols;
  for (std::size_t a = 0; a < m.rank(); ++a) {
    ModuleElement ea = ModuleElement::basis(m, a);
    cols.push_back(c.covariant(i, c.covariant(j, ea)) - c.covariant(j, c.covariant(i, ea)));
  }
  return cols;
}

class Curvature {
 public:
  /// Requires a metric connection; r is defined by <R(D,E)x, y> = <r(D,E), x^y>.
  explicit Curvature(const Connection& c) : mod_(&c.module()) {
    if (auto v = c.metricity_violation())
      throw std::invalid_argument("curvature form requires a metric connection (fails at generator " +
                                  std::to_string((*v)[0]) + ")");
    const MetricModule& m = *mod_;
    std::size_t n = m.backend().ngens();
    r_.assign(n, std::vector<Bivector>(n, Bivector::zero(m)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        auto cols = curvature_operator(c, i, j);
        PolyMatrix form(m.rank(), std::vector<Poly>(m.rank()));
        for (std::size_t a = 0; a < m.rank(); ++a)
          for (std::size_t d = 0; d < m.rank(); ++d) form[a][d] = inner_basis(cols[a], d);
        r_[i][j] = Bivector::from_form(m, form);
        r_[j][i] = Bivector::zero(m) - r_[i][j];
      }
  }

  const Bivector& r(std::size_t i, std::size_t j) const { return r_[i][j]; }
  const std::vector<std::vector<Bivector>>& table() const { return r_; }

  Bivector r(const DerElement& d, const DerElement& e) const {
    Bivector out = Bivector::zero(*mod_);
    for (std::size_t i = 0; i < d.comps().size(); ++i)
      for (std::size_t j = 0; j < e.comps().size(); ++j)
        if (!d.comp(i).is_zero() && !e.comp(j).is_zero()) out = out + (d.comp(i) * e.comp(j)) * r_[i][j];
    return out;
  }

 private:
  const MetricModule* mod_;
  std::vector<std::vector<Bivector>> r_;
};

/// nabla_{B_i} applied to a bivector, extended as a derivation of the wedge product.
inline Bivector covariant_bivector(const Connection& c, std::size_t i, const Bivector& xi) {
  const MetricModule& m = c.module();
  const Backend& b = m.backend();
  Bivector out = Bivector::zero(m);
  for (std::size_t a = 0; a < m.rank(); ++a)
    for (std::size_t d = 0; d < m.rank(); ++d) out.x[a][d] = apply_basis_der(b, i, xi.x[a][d]);
  for (std::size_t a = 0; a < m.rank(); ++a)
    for (std::size_t d = a + 1; d < m.rank(); ++d) {
      if (xi.x[a][d].is_zero()) continue;
      ModuleElement ea = ModuleElement::basis(m, a), ed = ModuleElement::basis(m, d);
      out = out + xi.x[a][d] * (Bivector::wedge(c.gamma(i, a), ed) + Bivector::wedge(ea, c.gamma(i, d)));
    }
  return out;
}

/// Cyclic Bianchi sum for r on all triples of derivation generators. The
/// commutator terms vanish because basis derivations commute.
inline bool bianchi_check(const Connection& c, const std::vector<std::vector<Bivector>>& r) {
  std::size_t n = c.module().backend().ngens();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        Bivector s = covariant_bivector(c, i, r[j][k]) + covariant_bivector(c, j, r[k][i]) +
                     covariant_bivector(c, k, r[i][j]);
        if (!s.is_zero()) return false;
      }
  return true;
}

inline bool bianchi_check(const Connection& c) { return bianchi_check(c, Curvature(c).table()); }

}  // namespace courant
