#pragma once

// Seeded random samplers for property tests and the CLI's randomized
// commands. Everything is driven by one std::mt19937_64 so runs replay
// exactly from the seed.

#include <random>

#include "courant/cmap.hpp"
#include "courant/symbol_map.hpp"

namespace courant {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& engine() { return rng_; }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  /// Small nonzero rationals, occasionally with denominator 2 or 3.
  Rational rational() {
    int num = 0;
    while (num == 0) num = uniform(-3, 3);
    int den = coin(0.2) ? uniform(2, 3) : 1;
    return make_rational(num, den);
  }

  Monomial monomial(const Backend& b, unsigned maxdeg) {
    Monomial m;
    if (b.is_dual()) {
      if (maxdeg >= 1 && coin()) m.exp[0] = 1;
      return m;
    }
    if (b.nvars() == 0) return m;
    unsigned deg = uniform(0, int(maxdeg));
    for (unsigned k = 0; k < deg; ++k) m.exp[uniform(0, int(b.nvars()) - 1)] += 1;
    return m;
  }

  Poly poly(const Backend& b, unsigned maxdeg, int max_terms = 2) {
    Poly p(b);
    int terms = uniform(1, max_terms);
    for (int t = 0; t < terms; ++t) p += Poly::monomial(b, monomial(b, maxdeg), rational());
    return p;
  }

  /// A polynomial that is zero with probability 1 - density.
  Poly sparse_poly(const Backend& b, unsigned maxdeg, double density) {
    return coin(density) ? poly(b, maxdeg) : Poly(b);
  }

  ModuleElement vector(const MetricModule& m, unsigned maxdeg, double density = 0.6) {
    ModuleElement x(m);
    for (std::size_t a = 0; a < m.rank(); ++a) x[a] = sparse_poly(m.backend(), maxdeg, density);
    return x;
  }

  /// Random homogeneous element of degree r with a few terms.
  RothElement roth(const MetricModule& m, int r, unsigned maxdeg, int terms = 3) {
    const Backend& b = m.backend();
    RothElement out(m);
    for (int t = 0; t < terms; ++t) {
      int pmax = b.ngens() == 0 ? 0 : r / 2;
      if (b.is_dual()) pmax = std::min(pmax, 1);
      int p = uniform(0, pmax);
      int q = r - 2 * p;
      if (q > int(m.rank())) {
        p = (r - int(m.rank()) + 1) / 2;
        if (p > pmax) continue;
        q = r - 2 * p;
      }
      std::vector<std::uint8_t> sym, ext;
      for (int k = 0; k < p; ++k) sym.push_back(std::uint8_t(uniform(0, int(b.ngens()) - 1)));
      std::vector<std::uint8_t> pool(m.rank());
      for (std::size_t a = 0; a < m.rank(); ++a) pool[a] = std::uint8_t(a);
      std::shuffle(pool.begin(), pool.end(), rng_);
      ext.assign(pool.begin(), pool.begin() + q);
      out += RothElement::monomial(m, poly(b, maxdeg), sym, ext);
    }
    return out;
  }

  /// A metric connection obtained by metrizing random Christoffel symbols.
  Connection metric_connection(const MetricModule& m, unsigned maxdeg, double density = 0.4) {
    const Backend& b = m.backend();
    std::vector<std::vector<ModuleElement>> g(b.ngens(), std::vector<ModuleElement>(m.rank(), ModuleElement(m)));
    for (auto& row : g)
      for (auto& v : row) {
        v = vector(m, maxdeg, density);
        if (b.is_dual()) v = Poly::variable(b, 0) * v;
      }
    return metrize(Connection(m, std::move(g)));
  }

  /// A random derivation of A.
  DerElement derivation(const Backend& b, unsigned maxdeg) {
    std::vector<Poly> c(b.ngens());
    for (auto& p : c) p = sparse_poly(b, maxdeg, 0.7);
    return DerElement(b, c);
  }

  /// Raw degree 2 element: omega(a,b) = 1/2 sigma(g_ab) + S_ab with S antisymmetric.
  CMap raw_c2(const MetricModule& m, unsigned maxdeg) {
    const Backend& b = m.backend();
    DerElement sigma = derivation(b, maxdeg);
    CMap d = CMap::zero(m, 2);
    std::vector<std::vector<Poly>> s(m.rank(), std::vector<Poly>(m.rank(), Poly(b)));
    for (std::size_t a = 0; a < m.rank(); ++a)
      for (std::size_t c = a + 1; c < m.rank(); ++c) {
        s[a][c] = sparse_poly(b, maxdeg, 0.6);
        s[c][a] = -s[a][c];
      }
    for (std::size_t a = 0; a < m.rank(); ++a) {
      std::vector<Poly> w(m.rank());
      for (std::size_t c = 0; c < m.rank(); ++c) w[c] = Rational(1, 2) * sigma.apply(m.g(a, c)) + s[a][c];
      d.value({a}) = raise_index(m, w);
    }
    for (std::size_t g = 0; g < b.ngens(); ++g) d.dterm(g) = CMap::scalar(m, sigma.image(g));
    return d;
  }

  /// Raw degree 3 element for a constant gram: an alternating table plus an
  /// arbitrary symbol (in eps*E over the dual numbers).
  CMap raw_c3(const MetricModule& m, unsigned maxdeg) {
    if (!m.constant_gram()) throw std::invalid_argument("raw degree 3 sampling needs a constant gram");
    const Backend& b = m.backend();
    const std::size_t k = m.rank();
    std::vector<Poly> w(k * k * k, Poly(b));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t c = a + 1; c < k; ++c)
        for (std::size_t e = c + 1; e < k; ++e) {
          Poly v = sparse_poly(b, maxdeg, 0.7);
          std::array<std::size_t, 3> t{a, c, e};
          int sign = 1;
          std::sort(t.begin(), t.end());
          do {
            // sign of the permutation relative to (a, c, e)
            int inv = 0;
            for (int i = 0; i < 3; ++i)
              for (int j = i + 1; j < 3; ++j) inv += t[i] > t[j];
            sign = inv % 2 ? -1 : 1;
            w[(t[0] * k + t[1]) * k + t[2]] = sign > 0 ? v : -v;
          } while (std::next_permutation(t.begin(), t.end()));
        }
    CForm f;
    f.mod = &m;
    f.r = 3;
    f.table = w;
    for (std::size_t g = 0; g < b.ngens(); ++g) {
      ModuleElement kv = vector(m, maxdeg, 0.6);
      if (b.is_dual()) kv = Poly::variable(b, 0) * kv;
      CForm kf = to_form(CMap::vector(kv));
      f.dterms.push_back(kf);
    }
    return from_form(f);
  }

  /// A valid element of C^r: raw samplers in degree 2 and (constant gram) 3,
  /// J images of random Rothstein elements otherwise.
  CMap cmap(const Connection& conn, int r, unsigned maxdeg) {
    const MetricModule& m = conn.module();
    if (r == 0) return CMap::scalar(m, poly(m.backend(), maxdeg));
    if (r == 1) return CMap::vector(vector(m, maxdeg));
    if (r == 2 && coin()) return raw_c2(m, maxdeg);
    if (r == 3 && m.constant_gram() && coin()) return raw_c3(m, maxdeg);
    return apply_J(roth(m, r, maxdeg), conn, r);
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace courant
