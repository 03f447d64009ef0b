#pragma once

// The Poisson map J from the Rothstein algebra into C(E), its inverse in
// degrees up to 3, membership in the image of J by exact linear algebra, and
// the map lambda on the top Sym part.

#include <map>
#include <optional>

#include "courant/cmap.hpp"
#include "courant/linalg.hpp"
#include "courant/rothstein.hpp"

namespace courant {

/// J(B_i) = -nabla_{B_i}: values -Gamma_i, symbol -B_i on generators.
inline CMap j_of_der(const Connection& conn, std::size_t i) {
  const MetricModule& m = conn.module();
  const Backend& b = m.backend();
  CMap d = CMap::zero(m, 2);
  for (std::size_t a = 0; a < m.rank(); ++a) d.value({a}) = -conn.gamma(i, a);
  for (std::size_t g = 0; g < b.ngens(); ++g) d.dterm(g) = CMap::scalar(m, -basis_der_on_generator(b, i, g));
  return d;
}

inline int roth_degree(const RothElement& phi, int degree) {
  int d = phi.degree();
  if (d < 0) {
    if (degree < 0) throw std::invalid_argument("the degree of a zero element must be given");
    return degree;
  }
  if (degree >= 0 && degree != d) throw std::invalid_argument("element does not have the requested degree");
  return d;
}

/// J as the wedge homomorphism generated by J(a) = a, J(x) = x, J(D) = -nabla_D.
inline CMap apply_J(const RothElement& phi, const Connection& conn, int degree = -1) {
  const MetricModule& m = conn.module();
  if (phi.module_ptr() != &m) throw ModuleMismatch("element and connection live on different modules");
  const int r = roth_degree(phi, degree);
  std::vector<CMap> jd;
  for (std::size_t i = 0; i < m.backend().ngens(); ++i) jd.push_back(j_of_der(conn, i));
  CMap out = CMap::zero(m, r);
  for (const auto& [k, c] : phi.terms()) {
    CMap t = CMap::scalar(m, c);
    for (auto s : k.sym) t = cmap_wedge(t, jd[s]);
    for (auto e : k.ext) t = cmap_wedge(t, CMap::vector(ModuleElement::basis(m, e)));
    out += t;
  }
  return out;
}

inline ModuleElement roth_vector_part(const RothElement& x) {
  ModuleElement v(x.module());
  for (const auto& [k, c] : x.terms()) {
    if (k.degree() != 1) throw std::logic_error("expected an element of degree 1");
    v[k.ext[0]] += c;
  }
  return v;
}

inline Poly roth_scalar_part(const RothElement& x) {
  Poly p(x.module().backend());
  for (const auto& [k, c] : x.terms()) {
    if (k.degree() != 0) throw std::logic_error("expected an element of degree 0");
    p += c;
  }
  return p;
}

namespace detail {

inline void fill_nested(const RothElement& phi, const RothBracket& br, CMap& out, std::vector<std::size_t>& t,
                        std::size_t depth) {
  const MetricModule& m = br.module();
  if (depth + 1 == static_cast<std::size_t>(out.degree())) {
    out.value(t) = roth_vector_part(phi);
    return;
  }
  for (std::size_t a = 0; a < m.rank(); ++a) {
    t[depth] = a;
    fill_nested(br(phi, RothElement::vector(ModuleElement::basis(m, a))), br, out, t, depth + 1);
  }
}

}  // namespace detail

/// J computed from nested brackets: J(phi)(x_1..x_{r-1}) = {..{phi,x_1}..,x_{r-1}}
/// and [J(phi), x_g] = J({phi, x_g}).
inline CMap apply_J_nested(const RothElement& phi, const RothBracket& br, int degree = -1) {
  const MetricModule& m = br.module();
  const int r = roth_degree(phi, degree);
  if (r == 0) return CMap::scalar(m, roth_scalar_part(phi));
  if (r == 1) return CMap::vector(roth_vector_part(phi));
  CMap out = CMap::zero(m, r);
  std::vector<std::size_t> t(r - 1, 0);
  detail::fill_nested(phi, br, out, t, 0);
  for (std::size_t g = 0; g < m.backend().ngens(); ++g)
    out.dterm(g) = apply_J_nested(br(phi, RothElement::scalar(m, Poly::variable(m.backend(), g))), br, r - 2);
  return out;
}

/// The k-vector whose J-image has the alternating form omega on basis tuples:
/// kappa_k / k! * sum_t omega(t) ebar_{t_1} ^ ... ^ ebar_{t_k}, with ebar the
/// dual basis and kappa_k = (-1)^(k(k-1)/2).
inline RothElement raise_alternating(const MetricModule& m, int k,
                                     const std::function<Poly(const std::vector<std::size_t>&)>& omega) {
  RothElement out(m);
  if (k == 0) return RothElement::scalar(m, omega({}));
  std::vector<RothElement> dual;
  for (std::size_t a = 0; a < m.rank(); ++a) {
    std::vector<Poly> row(m.rank());
    for (std::size_t b = 0; b < m.rank(); ++b) row[b] = m.ginv(a, b);
    dual.push_back(RothElement::vector(ModuleElement(m, row)));
  }
  Rational scale = (k * (k - 1) / 2) % 2 ? Rational(-1) : Rational(1);
  for (int i = 2; i <= k; ++i) scale /= i;
  std::vector<std::size_t> t(k, 0);
  for (;;) {
    bool distinct = true;
    for (int i = 0; i < k && distinct; ++i)
      for (int j = i + 1; j < k; ++j)
        if (t[i] == t[j]) distinct = false;
    if (distinct) {
      Poly w = omega(t);
      if (!w.is_zero()) {
        RothElement prod = RothElement::scalar(m, w * scale);
        for (auto a : t) prod = wedge(prod, dual[a]);
        out += prod;
      }
    }
    int p = k - 1;
    while (p >= 0 && ++t[p] == m.rank()) t[p--] = 0;
    if (p < 0) break;
  }
  return out;
}

/// Preimage under J of an element of degree at most 3. The Der part is read
/// off the symbol; the remainder must be an alternating A-multilinear form.
inline RothElement invert_J(const CMap& c, const Connection& conn) {
  const MetricModule& m = conn.module();
  const Backend& b = m.backend();
  if (c.module_ptr() != &m) throw ModuleMismatch("element and connection live on different modules");
  const int r = c.degree();
  if (r > 3) throw std::invalid_argument("invert_J handles degrees up to 3");
  if (r == 0) return RothElement::scalar(m, c.scalar_value());
  if (r == 1) return RothElement::vector(c.vector_value());
  // psi = -sum_i B_i (x) k_i with K_g(C) = sum_i B_i(x_g) k_i
  RothElement psi(m);
  auto der_coeff = [&](const CMap& kg) -> CMap {
    if (!b.is_dual()) return kg;
    // K_eps = eps * k0; recover k0 from the eps coefficients
    Monomial e = Monomial::var(0);
    auto strip = [&](const Poly& p) {
      if (!courant::is_zero(p.constant_term()))
        throw std::invalid_argument("symbol does not lie in eps times the module");
      return Poly(b, p.coefficient(e));
    };
    if (kg.degree() == 0) return CMap::scalar(m, strip(kg.scalar_value()));
    ModuleElement v(m);
    for (std::size_t a = 0; a < m.rank(); ++a) v[a] = strip(kg.vector_value()[a]);
    return CMap::vector(v);
  };
  for (std::size_t i = 0; i < b.ngens(); ++i) {
    CMap k = der_coeff(c.dterm(i));
    RothElement d = RothElement::monomial(m, Poly(b, 1), {std::uint8_t(i)}, {});
    if (r == 2) {
      psi -= k.scalar_value() * d;
    } else {
      psi -= wedge(d, RothElement::vector(k.vector_value()));
    }
  }
  CMap t = c - apply_J(psi, conn, r);
  for (const auto& d : t.dterms())
    if (!d.is_zero()) throw std::invalid_argument("remainder is not A-linear: the symbol is not of the form J(D)");
  const CForm f = to_form(t);
  std::vector<std::size_t> idx(r, 0);
  do {
    for (int i = 0; i + 1 < r; ++i) {
      std::vector<std::size_t> s = idx;
      std::swap(s[i], s[i + 1]);
      if (!(f.at(idx) == -f.at(s)))
        throw std::invalid_argument("remainder form is not alternating at (" + c.tuple_name(idx) + ")");
    }
  } while (c.bump(idx));
  RothElement theta = raise_alternating(m, r, [&](const std::vector<std::size_t>& tt) { return f.at(tt); });
  RothElement out = theta + psi;
  if (!(apply_J(out, conn, r) == c)) throw std::logic_error("invert_J: round trip through J failed");
  return out;
}

inline RothElement invert_J_deg3(const CMap& c, const Connection& conn) {
  if (c.degree() != 3) throw std::invalid_argument("invert_J_deg3 expects an element of degree 3");
  return invert_J(c, conn);
}

// ---------------------------------------------------------------------------
// Flattening to rational coordinates

using CoordKey = std::vector<int>;
using CoordVec = std::map<CoordKey, Rational>;

inline void flatten_poly(const Poly& p, CoordKey key, CoordVec& out) {
  for (const auto& [mono, c] : p.terms()) {
    CoordKey k = key;
    for (auto e : mono.exp) k.push_back(e);
    out[k] += c;
  }
}

/// Coordinates of an element of C(E): symbol path, then -1, then table slot,
/// component and monomial exponents.
inline void flatten(const CMap& c, CoordVec& out, CoordKey prefix = {}) {
  CoordKey k = prefix;
  k.push_back(-1);
  if (c.degree() == 0) {
    flatten_poly(c.scalar_value(), k, out);
  } else if (c.degree() == 1) {
    for (std::size_t a = 0; a < c.module().rank(); ++a) {
      CoordKey ka = k;
      ka.push_back(int(a));
      flatten_poly(c.vector_value()[a], ka, out);
    }
  } else {
    for (std::size_t i = 0; i < c.values().size(); ++i)
      for (std::size_t a = 0; a < c.module().rank(); ++a) {
        CoordKey ka = k;
        ka.push_back(int(i));
        ka.push_back(int(a));
        flatten_poly(c.values()[i][a], ka, out);
      }
    for (std::size_t g = 0; g < c.dterms().size(); ++g) {
      CoordKey kg = prefix;
      kg.push_back(int(g));
      flatten(c.dterm(g), out, kg);
    }
  }
}

inline CoordVec flatten(const CMap& c) {
  CoordVec v;
  flatten(c, v);
  for (auto it = v.begin(); it != v.end();) it = sgn(it->second) == 0 ? v.erase(it) : std::next(it);
  return v;
}

inline CoordVec flatten(const RothElement& x) {
  CoordVec v;
  for (const auto& [k, c] : x.terms()) {
    CoordKey key;
    for (auto s : k.sym) key.push_back(s);
    key.push_back(-1);
    for (auto e : k.ext) key.push_back(e);
    key.push_back(-1);
    flatten_poly(c, key, v);
  }
  return v;
}

/// Describes a coordinate key of an element of C(E) of degree r.
inline std::string describe_coord(const MetricModule& m, int r, const CoordKey& k) {
  const Backend& b = m.backend();
  std::string s;
  std::size_t i = 0;
  int deg = r;
  for (; i < k.size() && k[i] != -1; ++i, deg -= 2) s += "[" + std::string(s.empty() ? "C" : "") + "," + b.var(k[i]) + "]";
  if (s.empty()) s = "C";
  ++i;
  Monomial mono;
  std::string where;
  if (deg >= 2) {
    std::size_t idx = k[i++];
    std::vector<std::size_t> t(deg - 1);
    for (int p = deg - 2; p >= 0; --p) {
      t[p] = idx % m.rank();
      idx /= m.rank();
    }
    std::string args;
    for (std::size_t p = 0; p < t.size(); ++p) args += (p ? "," : "") + m.names()[t[p]];
    where = "(" + args + ")";
  }
  if (deg >= 1) where += " component " + m.names()[k[i++]];
  for (std::size_t v = 0; v < kMaxVars && i < k.size(); ++v) mono.exp[v] = std::uint8_t(k[i++]);
  return s + where + " coefficient of " + monomial_to_string(b, mono);
}

/// Truncated Q-basis of the degree r part of the Rothstein algebra: monomial
/// coefficients of degree at most cap times d_S (x) e_T.
inline std::vector<RothElement> roth_basis(const MetricModule& m, int r, unsigned cap) {
  const Backend& b = m.backend();
  std::vector<RothElement> out;
  std::vector<Monomial> coeffs{Monomial{}};
  for (const auto& mono : detail::probe_monomials(b, cap)) coeffs.push_back(mono);
  const std::size_t n = b.ngens();
  for (int p = r / 2; p >= 0; --p) {
    const int q = r - 2 * p;
    if (q > static_cast<int>(m.rank())) continue;
    if (p > 0 && n == 0) continue;
    // multisets of size p from n generators
    std::vector<std::vector<std::uint8_t>> syms;
    std::vector<std::uint8_t> cur;
    std::function<void(std::size_t)> ms = [&](std::size_t start) {
      if (static_cast<int>(cur.size()) == p) {
        syms.push_back(cur);
        return;
      }
      for (std::size_t g = start; g < n; ++g) {
        cur.push_back(std::uint8_t(g));
        ms(g);
        cur.pop_back();
      }
    };
    ms(0);
    std::vector<std::vector<std::uint8_t>> exts;
    std::function<void(std::size_t)> ss = [&](std::size_t start) {
      if (static_cast<int>(cur.size()) == q) {
        exts.push_back(cur);
        return;
      }
      for (std::size_t a = start; a < m.rank(); ++a) {
        cur.push_back(std::uint8_t(a));
        ss(a + 1);
        cur.pop_back();
      }
    };
    ss(0);
    for (const auto& s : syms)
      for (const auto& e : exts)
        for (const auto& mono : coeffs) {
          RothElement x = RothElement::monomial(m, Poly::monomial(b, mono, Rational(1)), s, e);
          if (!x.is_zero()) out.push_back(std::move(x));
        }
  }
  return out;
}

namespace detail {

struct CoordSystem {
  std::map<CoordKey, std::size_t> index;
  std::vector<CoordKey> keys;
  std::size_t id(const CoordKey& k) {
    auto [it, ins] = index.try_emplace(k, keys.size());
    if (ins) keys.push_back(k);
    return it->second;
  }
};

inline QMatrix columns_to_matrix(const std::vector<CoordVec>& cols, CoordSystem& cs) {
  for (const auto& c : cols)
    for (const auto& [k, v] : c) cs.id(k);
  QMatrix a(cs.keys.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (const auto& [k, v] : cols[j]) a(cs.index.at(k), j) = v;
  return a;
}

}  // namespace detail

enum class Membership { Member, NonMember, Inconclusive };

inline const char* to_string(Membership s) {
  switch (s) {
    case Membership::Member:
      return "member";
    case Membership::NonMember:
      return "non-member";
    default:
      return "inconclusive";
  }
}

struct MembershipResult {
  Membership status = Membership::Inconclusive;
  unsigned cap = 0;
  std::size_t unknowns = 0;
  std::size_t equations = 0;
  std::optional<RothElement> preimage;
  // y with y * J = 0 and y * C != 0, indexed by coordinate description
  std::vector<std::pair<std::string, Rational>> certificate;
  std::string witness;
  Rational pairing;  // y * C
};

/// Decides whether C lies in the image of J, within coefficient degree cap.
/// Over the dual numbers and over Q the truncation is exact; over a
/// polynomial ring a failed solve is reported as inconclusive.
inline MembershipResult chat_membership(const CMap& c, const Connection& conn, unsigned cap) {
  const MetricModule& m = conn.module();
  const Backend& b = m.backend();
  MembershipResult res;
  res.cap = cap;
  const int r = c.degree();
  auto basis = roth_basis(m, r, cap);
  std::vector<CoordVec> cols;
  for (const auto& x : basis) cols.push_back(flatten(apply_J(x, conn, r)));
  detail::CoordSystem cs;
  CoordVec target = flatten(c);
  QMatrix a = detail::columns_to_matrix(cols, cs);
  for (const auto& [k, v] : target) cs.id(k);
  if (cs.keys.size() != a.rows()) {
    QMatrix bigger(cs.keys.size(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) bigger(i, j) = a(i, j);
    a = std::move(bigger);
  }
  std::vector<Rational> rhs(cs.keys.size());
  for (const auto& [k, v] : target) rhs[cs.index.at(k)] = v;
  res.unknowns = a.cols();
  res.equations = a.rows();
  SolveResult sol = solve(a, rhs);
  if (sol.feasible) {
    RothElement phi(m);
    for (std::size_t j = 0; j < basis.size(); ++j)
      if (sgn(sol.solution[j]) != 0) phi += sol.solution[j] * basis[j];
    if (!(apply_J(phi, conn, r) == c)) throw std::logic_error("membership solve returned a wrong preimage");
    res.status = Membership::Member;
    res.preimage = std::move(phi);
    return res;
  }
  bool exact = b.is_dual() || b.ngens() == 0;
  res.status = exact ? Membership::NonMember : Membership::Inconclusive;
  for (std::size_t i = 0; i < sol.certificate.size(); ++i) {
    if (sgn(sol.certificate[i]) == 0) continue;
    std::string d = describe_coord(m, r, cs.keys[i]);
    res.certificate.emplace_back(d, sol.certificate[i]);
    res.pairing += sol.certificate[i] * rhs[i];
    if (res.witness.empty() && sgn(rhs[i]) != 0) res.witness = d;
  }
  return res;
}

/// dim ker J on the truncated basis of degree r.
inline std::size_t j_kernel_dimension(const Connection& conn, int r, unsigned cap) {
  auto basis = roth_basis(conn.module(), r, cap);
  std::vector<CoordVec> cols;
  for (const auto& x : basis) cols.push_back(flatten(apply_J(x, conn, r)));
  detail::CoordSystem cs;
  QMatrix a = detail::columns_to_matrix(cols, cs);
  return basis.size() - rank(a);
}

// ---------------------------------------------------------------------------
// lambda

/// lambda(phi)(a_1..a_p) = {..{phi, a_1}.., a_p}.
inline RothElement lambda_eval(const RothElement& phi, const RothBracket& br, const std::vector<Poly>& args) {
  RothElement x = phi;
  for (const auto& a : args) x = br(x, RothElement::scalar(phi.module(), a));
  return x;
}

/// Sym degree of the top part.
inline int sym_degree(const RothElement& phi) {
  int p = 0;
  for (const auto& [k, c] : phi.terms()) p = std::max(p, int(k.sym.size()));
  return p;
}

/// True when lambda(phi) vanishes on all generator-monomial probes of
/// degree at most cap exactly when phi = 0.
inline bool lambda_check(const RothElement& phi, const RothBracket& br, unsigned cap = 2) {
  const Backend& b = phi.module().backend();
  const int p = sym_degree(phi);
  std::vector<Poly> probes;
  for (const auto& mono : detail::probe_monomials(b, std::max(1u, cap))) probes.push_back(Poly::monomial(b, mono, 1));
  bool all_zero = true;
  std::vector<std::size_t> idx(p, 0);
  if (!probes.empty() || p == 0) {
    for (;;) {
      std::vector<Poly> args;
      for (auto i : idx) args.push_back(probes[i]);
      if (!lambda_eval(phi, br, args).is_zero()) {
        all_zero = false;
        break;
      }
      int k = p - 1;
      while (k >= 0 && ++idx[k] == probes.size()) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  return all_zero == phi.is_zero();
}

/// dim ker lambda on the truncated Sym^p (x) Lambda^q basis.
inline std::size_t lambda_kernel_dimension(const RothBracket& br, int p, int q, unsigned cap) {
  const MetricModule& m = br.module();
  const Backend& b = m.backend();
  std::vector<RothElement> basis;
  for (auto& x : roth_basis(m, 2 * p + q, cap)) {
    bool keep = true;
    for (const auto& [k, c] : x.terms()) keep = keep && int(k.sym.size()) == p;
    if (keep) basis.push_back(std::move(x));
  }
  std::vector<Poly> probes;
  for (const auto& mono : detail::probe_monomials(b, cap + 1)) probes.push_back(Poly::monomial(b, mono, 1));
  std::vector<CoordVec> cols(basis.size());
  std::vector<std::size_t> idx(p, 0);
  int tag = 0;
  if (p > 0 && probes.empty()) return basis.size();
  for (;;) {
    std::vector<Poly> args;
    for (auto i : idx) args.push_back(probes[i]);
    for (std::size_t j = 0; j < basis.size(); ++j)
      for (auto& [k, v] : flatten(lambda_eval(basis[j], br, args))) {
        CoordKey kk = k;
        kk.insert(kk.begin(), tag);
        cols[j][kk] += v;
      }
    ++tag;
    int k = p - 1;
    while (k >= 0 && ++idx[k] == probes.size()) idx[k--] = 0;
    if (k < 0) break;
  }
  detail::CoordSystem cs;
  QMatrix a = detail::columns_to_matrix(cols, cs);
  return basis.size() - rank(a);
}

// ---------------------------------------------------------------------------
// The degree 4 element outside the image of J

struct SderCounterexample {
  const MetricModule* mod = nullptr;
  Connection conn;
  CMap c;
};

/// A = Q[eps]/(eps^2), E = A e with <e,e> = 1 and the flat connection. The
/// element has vanishing values and iterated symbol [[C, eps], eps] = eps,
/// the bracket built from the symmetric biderivation P(a, b) = eps a' b'.
/// Every Sym^2 Der A contribution to J vanishes here, since eps d/deps
/// squares to zero on A.
inline SderCounterexample sder_counterexample() {
  const Backend& d = Backend::dual_numbers();
  const MetricModule& m = MetricModule::make(d, {"e"}, PolyMatrix(1, std::vector<Poly>(1, Poly(d, 1))));
  CMap k2 = CMap::zero(m, 2);
  k2.dterm(0) = CMap::scalar(m, Poly::variable(d, 0));
  CMap c = CMap::zero(m, 4);
  c.dterm(0) = k2;
  return SderCounterexample{&m, Connection::flat(m), c};
}

}  // namespace courant
