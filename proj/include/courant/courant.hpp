#pragma once

// Courant algebroid structures as degree 3 elements m with [m, m] = 0, their
// axioms, morphisms, the deformation differential and its cohomology, and
// Maurer-Cartan extension of formal deformations.

#include <optional>
#include <sstream>

#include "courant/cmap.hpp"
#include "courant/linalg.hpp"
#include "courant/symbol_map.hpp"

namespace courant {

struct CourantStructure {
  const MetricModule* mod = nullptr;
  Connection conn;
  CMap m;
  RothElement theta;

  const MetricModule& module() const { return *mod; }
};

/// Wraps a degree 3 element, computing its Rothstein preimage.
inline CourantStructure make_courant(const CMap& m, const Connection& conn) {
  if (m.degree() != 3) throw std::invalid_argument("a Courant structure is an element of degree 3");
  auto rep = cmap_verify(m);
  if (!rep.ok) throw std::invalid_argument("not a quasi-Courant element: " + rep.message);
  return CourantStructure{m.module_ptr(), conn, m, invert_J_deg3(m, conn)};
}

/// A = Q[x_1..x_n], E = A^{2n} with basis e_i (vector fields, weight -1)
/// and f_i (one-forms, weight +1), hyperbolic gram and flat connection.
/// The bracket is the Dorfman bracket; its element m has zero values and
/// [m, x_i] = f_i.
inline const MetricModule& standard_module(std::size_t n) {
  if (n < 1 || n > kMaxVars) throw std::invalid_argument("standard structure needs 1 to 8 variables");
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < n; ++i) vars.push_back(n == 1 ? "x" : "x" + std::to_string(i + 1));
  const Backend& b = Backend::free_poly(vars);
  std::vector<std::string> names;
  std::vector<int> weights;
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back(n == 1 ? "e" : "e" + std::to_string(i + 1));
    weights.push_back(-1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back(n == 1 ? "f" : "f" + std::to_string(i + 1));
    weights.push_back(1);
  }
  PolyMatrix g(2 * n, std::vector<Poly>(2 * n, Poly(b)));
  for (std::size_t i = 0; i < n; ++i) g[i][n + i] = g[n + i][i] = Poly(b, 1);
  return MetricModule::make(b, names, g, weights);
}

inline CourantStructure make_standard_courant(std::size_t n) {
  const MetricModule& mod = standard_module(n);
  CMap m = CMap::zero(mod, 3);
  for (std::size_t i = 0; i < n; ++i) m.dterm(i) = CMap::vector(ModuleElement::basis(mod, n + i));
  return make_courant(m, Connection::flat(mod));
}

/// Quadratic Lie algebra over Q: [e_i, e_j] = sum_k c[i][j][k] e_k with an
/// invariant gram. Rejects non-antisymmetric constants, non-invariant grams
/// and failures of the Jacobi identity.
inline CourantStructure make_quadratic_lie(const std::vector<std::vector<std::vector<Rational>>>& c,
                                           const std::vector<std::vector<Rational>>& gram,
                                           std::vector<std::string> names = {}) {
  const std::size_t k = gram.size();
  const Backend& b = Backend::free_poly({});
  if (names.empty()) names = MetricModule::default_names(k);
  PolyMatrix g(k, std::vector<Poly>(k, Poly(b)));
  for (std::size_t i = 0; i < k; ++i) {
    if (gram[i].size() != k) throw std::invalid_argument("gram matrix is not square");
    for (std::size_t j = 0; j < k; ++j) g[i][j] = Poly(b, gram[i][j]);
  }
  const MetricModule& mod = MetricModule::make(b, names, g);
  if (c.size() != k) throw std::invalid_argument("structure constants have wrong shape");
  CMap m = CMap::zero(mod, 3);
  for (std::size_t i = 0; i < k; ++i) {
    if (c[i].size() != k) throw std::invalid_argument("structure constants have wrong shape");
    for (std::size_t j = 0; j < k; ++j) {
      if (c[i][j].size() != k) throw std::invalid_argument("structure constants have wrong shape");
      for (std::size_t l = 0; l < k; ++l) {
        if (c[i][j][l] != -c[j][i][l])
          throw std::invalid_argument("structure constants are not antisymmetric");
        m.value({i, j})[l] = Poly(b, c[i][j][l]);
      }
    }
  }
  auto rep = cmap_verify(m);
  if (!rep.ok) throw std::invalid_argument("gram is not invariant under the bracket: " + rep.message);
  if (!cmap_bracket(m, m).is_zero()) throw std::invalid_argument("structure constants violate the Jacobi identity");
  return make_courant(m, Connection::flat(mod));
}

/// [x, y]_m = [[x, m], y].
inline ModuleElement derived_bracket(const CMap& m, const ModuleElement& x, const ModuleElement& y) {
  CMap xm = cmap_bracket(CMap::vector(x), m);
  return cmap_bracket(xm, CMap::vector(y)).vector_value();
}

/// sigma(x) a = sum_g d_g(a) <[m, x_g], x>.
inline Poly anchor(const CMap& m, const ModuleElement& x, const Poly& a) {
  Poly out(m.backend());
  for (std::size_t g = 0; g < m.backend().ngens(); ++g) {
    Poly pg = a.partial(g);
    if (pg.is_zero()) continue;
    out += pg * inner(m.dterm(g).vector_value(), x);
  }
  return out;
}

/// The anchor of a basis element as a derivation.
inline DerElement anchor_der(const CMap& m, std::size_t a) {
  const Backend& b = m.backend();
  ModuleElement ea = ModuleElement::basis(m.module(), a);
  std::vector<Poly> images(b.ngens());
  for (std::size_t g = 0; g < b.ngens(); ++g) images[g] = inner(m.dterm(g).vector_value(), ea);
  return DerElement::from_images(b, images);
}

// ---------------------------------------------------------------------------
// Axioms

struct CourantReport {
  bool axioms_ok = true;
  bool bracket_ok = true;
  bool agree = true;
  unsigned depth = 0;
  std::size_t probes = 0;
  std::string axiom_message;
  std::string bracket_message;
  bool ok() const { return axioms_ok && bracket_ok; }
};

namespace detail {

inline std::vector<ModuleElement> courant_probes(const MetricModule& m, unsigned depth, bool with_monomials) {
  std::vector<ModuleElement> out;
  for (std::size_t a = 0; a < m.rank(); ++a) out.push_back(ModuleElement::basis(m, a));
  if (!with_monomials) return out;
  for (const auto& mono : probe_monomials(m.backend(), depth))
    for (std::size_t a = 0; a < m.rank(); ++a)
      out.push_back(ModuleElement::basis(m, a, Poly::monomial(m.backend(), mono, Rational(1))));
  return out;
}

}  // namespace detail

/// Checks the three axioms of a Courant algebroid by evaluation (Jacobi in
/// Leibniz form, compatibility with the inner product, and the symmetric
/// part of the bracket) and, independently, cmap_verify plus [m, m] = 0.
/// Probes are basis elements and their monomial multiples up to depth, with
/// at most two monomial multiples per probe triple.
inline CourantReport verify_courant(const CMap& m, int depth = 2) {
  CourantReport rep;
  rep.depth = static_cast<unsigned>(depth);
  const MetricModule& mod = m.module();
  if (m.degree() != 3) throw std::invalid_argument("a Courant structure is an element of degree 3");

  // bracket route
  auto cv = cmap_verify(m, depth);
  if (!cv.ok) {
    rep.bracket_ok = false;
    rep.bracket_message = "not a quasi-Courant element: " + cv.message;
  } else {
    CMap mm = cmap_bracket(m, m);
    if (!mm.is_zero()) {
      rep.bracket_ok = false;
      rep.bracket_message = "[m,m] != 0: " + mm.to_string();
    }
  }

  // axiom route
  auto basis = detail::courant_probes(mod, depth, false);
  auto all = detail::courant_probes(mod, depth, true);
  auto br = [&](const ModuleElement& x, const ModuleElement& y) { return cmap_eval(m, {x, y}); };
  auto name = [&](const ModuleElement& x) { return x.to_string(); };
  auto fail = [&](const std::string& s) {
    rep.axioms_ok = false;
    rep.axiom_message = s;
  };
  // triples with at most two slots holding a monomial multiple; the
  // biderivation part of [m, m] only shows with two non-constant functions
  const std::size_t nb = basis.size();
  std::vector<std::array<const ModuleElement*, 3>> triples;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      for (std::size_t k = 0; k < all.size(); ++k) {
        if (i >= nb && j >= nb && k >= nb) continue;
        triples.push_back({&all[i], &all[j], &all[k]});
      }
  for (const auto& t : triples) {
    const ModuleElement &x = *t[0], &y = *t[1], &z = *t[2];
    ++rep.probes;
    std::string where = "(" + name(x) + ", " + name(y) + ", " + name(z) + ")";
    if (!(br(x, br(y, z)) == br(br(x, y), z) + br(y, br(x, z)))) {
      fail("Jacobi identity fails at " + where);
      break;
    }
    if (!(anchor(m, x, inner(y, z)) == inner(br(x, y), z) + inner(y, br(x, z)))) {
      fail("compatibility with the inner product fails at " + where);
      break;
    }
    if (!(inner(br(x, y) + br(y, x), z) == anchor(m, z, inner(x, y)))) {
      fail("symmetric part of the bracket fails at " + where);
      break;
    }
  }
  rep.agree = rep.axioms_ok == rep.bracket_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Morphisms

struct MorphismReport {
  bool ok = true;
  int failed_condition = 0;
  std::string message;
  std::size_t probes = 0;
};

/// Checks conditions (i)-(v) for (phi, psi) where phi is the variable
/// permutation carried by psi, on basis elements, their monomial multiples
/// and monomial functions up to depth.
inline MorphismReport verify_morphism(const CMap& m1, const CMap& m2, const ModuleMap& psi, int depth = 2) {
  MorphismReport rep;
  const MetricModule& e1 = m1.module();
  if (&psi.source() != &e1 || &psi.target() != &m2.module()) throw ModuleMismatch("module map does not match");
  const Backend& b = e1.backend();
  std::vector<Poly> funcs{Poly(b, 1)};
  for (const auto& mono : detail::probe_monomials(b, depth)) funcs.push_back(Poly::monomial(b, mono, Rational(1)));
  auto xs = detail::courant_probes(e1, depth, true);
  auto basis = detail::courant_probes(e1, depth, false);
  auto fail = [&](int c, const std::string& s) {
    rep.ok = false;
    rep.failed_condition = c;
    rep.message = s;
  };
  // (i) algebra morphism
  for (const auto& a : funcs)
    for (const auto& c : funcs) {
      ++rep.probes;
      if (!(psi.alg(a * c) == psi.alg(a) * psi.alg(c)))
        return fail(1, "phi(ab) != phi(a)phi(b) at a = " + a.to_string() + ", b = " + c.to_string()), rep;
    }
  // (ii) semilinearity
  for (const auto& a : funcs)
    for (const auto& x : basis) {
      ++rep.probes;
      if (!(psi(a * x) == psi.alg(a) * psi(x)))
        return fail(2, "psi(a x) != phi(a) psi(x) at a = " + a.to_string() + ", x = " + x.to_string()), rep;
    }
  // (iii) brackets
  for (const auto& x : xs)
    for (const auto& y : basis) {
      for (int order = 0; order < 2; ++order) {
        const ModuleElement& u = order ? y : x;
        const ModuleElement& v = order ? x : y;
        ++rep.probes;
        if (!(psi(cmap_eval(m1, {u, v})) == cmap_eval(m2, {psi(u), psi(v)})))
          return fail(3, "psi([x,y]) != [psi x, psi y] at x = " + u.to_string() + ", y = " + v.to_string()), rep;
      }
    }
  // (iv) anchors
  for (const auto& x : basis)
    for (const auto& a : funcs) {
      ++rep.probes;
      if (!(psi.alg(anchor(m1, x, a)) == anchor(m2, psi(x), psi.alg(a))))
        return fail(4, "phi(sigma(x)a) != sigma(psi x) phi(a) at x = " + x.to_string() + ", a = " + a.to_string()),
               rep;
    }
  // (v) inner products
  for (const auto& x : xs)
    for (const auto& y : basis) {
      ++rep.probes;
      if (!(psi.alg(inner(x, y)) == inner(psi(x), psi(y))))
        return fail(5, "phi<x,y> != <psi x, psi y> at x = " + x.to_string() + ", y = " + y.to_string()), rep;
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Deformation differential and cohomology

/// delta_m on the Rothstein side: {Theta, phi}.
inline RothElement deformation_differential(const CourantStructure& s, const RothElement& phi) {
  return RothBracket(s.conn)(s.theta, phi);
}

/// delta_m on the C side: [m, C].
inline CMap deformation_differential(const CourantStructure& s, const CMap& c) { return cmap_bracket(s.m, c); }

/// Internal weight of a monomial term: x_i counts +1, d_i counts -1, eps +1,
/// eps d/deps 0, and basis vectors carry the module weights.
inline int internal_weight(const MetricModule& m, const RothKey& k, const Monomial& mono) {
  const Backend& b = m.backend();
  int w = static_cast<int>(mono.degree());
  if (!b.is_dual()) w -= static_cast<int>(k.sym.size());
  for (auto e : k.ext) w += m.weights()[e];
  return w;
}

/// Internal degree of a homogeneous element, or nullopt if it is mixed.
inline std::optional<int> internal_degree(const RothElement& x) {
  std::optional<int> d;
  for (const auto& [k, c] : x.terms())
    for (const auto& [mono, q] : c.terms()) {
      int w = internal_weight(x.module(), k, mono);
      if (d && *d != w) return std::nullopt;
      d = w;
    }
  return d;
}

/// Basis of the (r, d) block: monomial terms of degree r and internal degree d.
inline std::vector<RothElement> block_basis(const MetricModule& m, int r, int d) {
  const Backend& b = m.backend();
  std::vector<RothElement> out;
  int maxw = 0;
  for (auto w : m.weights()) maxw = std::max(maxw, std::abs(w));
  // coefficient degree needed is at most d + p + r * maxw
  int cap = std::max(0, d + r / 2 + r * maxw);
  if (b.is_dual()) cap = std::min(cap, 1);
  if (b.ngens() == 0) cap = 0;
  for (auto& x : roth_basis(m, r, static_cast<unsigned>(cap))) {
    const auto& [k, c] = *x.terms().begin();
    if (internal_weight(m, k, c.terms().front().first) == d) out.push_back(std::move(x));
  }
  return out;
}

namespace detail {

// Number of monomials of total degree k in n variables.
inline std::size_t monomials_of_degree(std::size_t n, int k) {
  if (k < 0) return 0;
  if (n == 0) return k == 0 ? 1 : 0;
  // C(k + n - 1, n - 1)
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(k + n - 1), static_cast<unsigned long>(n - 1));
  return c.get_ui();
}

}  // namespace detail

/// Dimension of the (r, d) block counted combinatorially, without building
/// the basis: choose p Der factors (with repetition), a set of r - 2p basis
/// vectors, and a coefficient monomial making up the remaining weight.
inline std::size_t block_dimension_count(const MetricModule& m, int r, int d) {
  const Backend& b = m.backend();
  const std::size_t n = b.ngens(), k = m.rank();
  std::size_t total = 0;
  for (int p = 0; 2 * p <= r; ++p) {
    const int q = r - 2 * p;
    if (p > 0 && n == 0) continue;
    if (b.is_dual() && p > 1) continue;
    std::size_t sym_count = detail::monomials_of_degree(n, p);
    // subsets of size q grouped by total weight
    std::map<int, std::size_t> by_weight;
    std::function<void(std::size_t, int, int)> rec = [&](std::size_t start, int left, int w) {
      if (left == 0) {
        ++by_weight[w];
        return;
      }
      for (std::size_t a = start; a < k; ++a) rec(a + 1, left - 1, w + m.weights()[a]);
    };
    rec(0, q, 0);
    for (const auto& [w, cnt] : by_weight) {
      std::size_t coeffs;
      if (b.is_dual()) {
        // eps counts +1, eps d/deps counts 0, and eps kills Der factors
        int need = d - w;
        coeffs = (need == 0 ? 1 : 0) + (need == 1 && p == 0 ? 1 : 0);
      } else {
        coeffs = detail::monomials_of_degree(n, d - w + p);
      }
      total += sym_count * cnt * coeffs;
    }
  }
  return total;
}

struct CohomologyCell {
  int r = 0;
  int d = 0;
  std::size_t chain_dim = 0;  // from the enumerated basis
  std::size_t counted_dim = 0;  // from the combinatorial count
  std::size_t rank_out = 0;  // rank of delta: (r, d) -> (r+1, d)
  std::size_t dim = 0;  // ker delta_r - rank delta_{r-1}
};

struct CohomologyTable {
  std::vector<CohomologyCell> cells;
  bool delta_squared_zero = true;
  bool euler_ok = true;
  bool counts_ok = true;
  std::string message;

  const CohomologyCell* find(int r, int d) const {
    for (const auto& c : cells)
      if (c.r == r && c.d == d) return &c;
    return nullptr;
  }
};

/// Matrix of delta = {Theta, .} from block (r, d) to block (r+1, d).
inline QMatrix delta_block(const RothBracket& br, const RothElement& theta, const std::vector<RothElement>& src,
                           const std::vector<RothElement>& dst) {
  std::map<CoordKey, std::size_t> row;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto f = flatten(dst[i]);
    row.emplace(f.begin()->first, i);
  }
  QMatrix a(dst.size(), src.size());
  for (std::size_t j = 0; j < src.size(); ++j)
    for (const auto& [k, v] : flatten(br(theta, src[j]))) {
      auto it = row.find(k);
      if (it == row.end()) throw std::runtime_error("the differential does not preserve the internal degree");
      a(it->second, j) = v;
    }
  return a;
}

/// Cohomology dimensions of delta = {Theta, .} for r in [0, rmax] and
/// d in [dmin, dmax], with delta^2 = 0 and Euler characteristic checks.
inline CohomologyTable cohomology_dims(const CourantStructure& s, int rmax, int dmin, int dmax) {
  const MetricModule& m = s.module();
  if (!internal_degree(s.theta).has_value() && !s.theta.is_zero())
    throw std::invalid_argument("Theta is not homogeneous in the internal degree; blocks are not defined");
  RothBracket br(s.conn);
  CohomologyTable tab;
  for (int d = dmin; d <= dmax; ++d) {
    std::vector<std::vector<RothElement>> bases;
    for (int r = 0; r <= rmax + 1; ++r) bases.push_back(block_basis(m, r, d));
    std::vector<QMatrix> deltas;
    for (int r = 0; r <= rmax; ++r) deltas.push_back(delta_block(br, s.theta, bases[r], bases[r + 1]));
    // delta^2 over the next block as well
    if (rmax + 2 <= kMaxCDegree) {
      auto next = block_basis(m, rmax + 2, d);
      QMatrix last = delta_block(br, s.theta, bases[rmax + 1], next);
      if (!(last * deltas[rmax]).is_zero()) {
        tab.delta_squared_zero = false;
        tab.message = "delta^2 != 0 at r = " + std::to_string(rmax) + ", d = " + std::to_string(d);
      }
    }
    std::vector<std::size_t> ranks;
    for (int r = 0; r <= rmax; ++r) {
      ranks.push_back(rank(deltas[r]));
      if (r > 0 && !(deltas[r] * deltas[r - 1]).is_zero()) {
        tab.delta_squared_zero = false;
        tab.message = "delta^2 != 0 at r = " + std::to_string(r - 1) + ", d = " + std::to_string(d);
      }
    }
    long euler_h = 0, euler_c = 0;
    for (int r = 0; r <= rmax; ++r) {
      CohomologyCell c;
      c.r = r;
      c.d = d;
      c.chain_dim = bases[r].size();
      c.counted_dim = block_dimension_count(m, r, d);
      c.rank_out = ranks[r];
      c.dim = c.chain_dim - ranks[r] - (r > 0 ? ranks[r - 1] : 0);
      if (c.chain_dim != c.counted_dim) {
        tab.counts_ok = false;
        tab.message = "basis enumeration and count disagree at r = " + std::to_string(r) + ", d = " + std::to_string(d);
      }
      long sign = r % 2 ? -1 : 1;
      euler_h += sign * long(c.dim);
      euler_c += sign * long(c.counted_dim);
      tab.cells.push_back(c);
    }
    euler_h += (rmax % 2 ? -1 : 1) * long(ranks[rmax]);
    if (euler_h != euler_c) {
      tab.euler_ok = false;
      tab.message = "Euler characteristic mismatch at d = " + std::to_string(d);
    }
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Maurer-Cartan

struct McReport {
  bool valid = true;
  int failed_order = 0;
  RothElement obstruction;
  bool obstruction_is_cocycle = true;
  bool accepted = false;
  std::vector<RothElement> residuals;  // residual of the order j relation, j = 1..k
};

/// Residual of the order j relation 2{Theta, Theta_j} + sum_{i=1}^{j-1} {Theta_i, Theta_{j-i}}.
inline RothElement mc_residual(const RothBracket& br, const RothElement& theta, const std::vector<RothElement>& series,
                               std::size_t j) {
  RothElement out = Rational(2) * br(theta, series.at(j - 1));
  for (std::size_t i = 1; i < j; ++i) out += br(series[i - 1], series[j - i - 1]);
  return out;
}

/// sum_{i=1}^{k} {Theta_i, Theta_{k+1-i}}.
inline RothElement mc_obstruction(const RothBracket& br, const std::vector<RothElement>& series) {
  const std::size_t k = series.size();
  RothElement out(br.module());
  for (std::size_t i = 1; i <= k; ++i) out += br(series[i - 1], series[k - i]);
  return out;
}

/// Validates the order k series, computes the obstruction and decides
/// whether candidate extends it to order k+1.
inline McReport mc_extend(const CourantStructure& s, const std::vector<RothElement>& series,
                          const std::optional<RothElement>& candidate) {
  RothBracket br(s.conn);
  McReport rep;
  rep.obstruction = RothElement(s.module());
  for (std::size_t j = 1; j <= series.size(); ++j) {
    RothElement res = mc_residual(br, s.theta, series, j);
    rep.residuals.push_back(res);
    if (!res.is_zero() && rep.valid) {
      rep.valid = false;
      rep.failed_order = int(j);
    }
  }
  if (!rep.valid) return rep;
  rep.obstruction = mc_obstruction(br, series);
  rep.obstruction_is_cocycle = br(s.theta, rep.obstruction).is_zero();
  if (candidate) rep.accepted = (Rational(2) * br(s.theta, *candidate) + rep.obstruction).is_zero();
  return rep;
}

/// Theta_j = (ad_xi)^j Theta / j!, the trivial deformation generated by xi.
inline std::vector<RothElement> trivial_deformation(const CourantStructure& s, const RothElement& xi, std::size_t k) {
  RothBracket br(s.conn);
  std::vector<RothElement> out;
  RothElement cur = s.theta;
  for (std::size_t j = 1; j <= k; ++j) {
    cur = Rational(1, long(j)) * br(xi, cur);
    out.push_back(cur);
  }
  return out;
}

/// Coefficient of t^j in {Theta_t, Theta_t} for Theta_t = Theta + sum_i t^i
/// Theta_i, obtained by evaluating at 2k+1 rational points and
/// interpolating, where k is the series length.
inline RothElement mc_bruteforce_coefficient(const CourantStructure& s, const std::vector<RothElement>& series,
                                             std::size_t j) {
  RothBracket br(s.conn);
  const std::size_t deg = 2 * series.size();
  const std::size_t npts = deg + 1;
  std::vector<CoordVec> vals;
  QMatrix vander(npts, npts);
  for (std::size_t p = 0; p < npts; ++p) {
    Rational t(long(p) + 1);
    RothElement th = s.theta;
    Rational tp = 1;
    for (std::size_t i = 0; i < series.size(); ++i) {
      tp *= t;
      th += tp * series[i];
    }
    vals.push_back(flatten(br(th, th)));
    Rational pw = 1;
    for (std::size_t c = 0; c < npts; ++c) {
      vander(p, c) = pw;
      pw *= t;
    }
  }
  // solve per coordinate
  std::map<CoordKey, bool> keys;
  for (const auto& v : vals)
    for (const auto& [k, q] : v) keys[k] = true;
  CoordVec coeff;
  for (const auto& [k, unused] : keys) {
    std::vector<Rational> rhs(npts);
    for (std::size_t p = 0; p < npts; ++p) {
      auto it = vals[p].find(k);
      if (it != vals[p].end()) rhs[p] = it->second;
    }
    auto sol = solve(vander, rhs);
    if (j < sol.solution.size() && sgn(sol.solution[j]) != 0) coeff[k] = sol.solution[j];
  }
  // rebuild the element from coordinates
  const MetricModule& m = s.module();
  RothElement out(m);
  for (const auto& [k, q] : coeff) {
    RothKey key;
    std::size_t i = 0;
    for (; k[i] != -1; ++i) key.sym.push_back(std::uint8_t(k[i]));
    for (++i; k[i] != -1; ++i) key.ext.push_back(std::uint8_t(k[i]));
    ++i;
    Monomial mono;
    for (std::size_t v = 0; v < kMaxVars; ++v) mono.exp[v] = std::uint8_t(k[i + v]);
    out.add_term(key, Poly::monomial(m.backend(), mono, q));
  }
  return out;
}

}  // namespace courant
