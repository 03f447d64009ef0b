#pragma once

// Derivations of the coefficient algebra and symmetric multiderivations.
//
// Der(Q[x_1..x_n]) is free on d/dx_i. Der(Q[eps]/(eps^2)) is generated by
// eps*d/deps subject to eps*(eps*d/deps) = 0, so a derivation there is a
// rational multiple of that generator.

#include <map>
#include <numeric>
#include <vector>

#include "courant/poly.hpp"

namespace courant {

/// Image of the i-th basis derivation on the g-th algebra generator.
inline Poly basis_der_on_generator(const Backend& b, std::size_t i, std::size_t g) {
  if (b.is_dual()) return Poly::variable(b, 0);  // (eps d/deps)(eps) = eps
  return Poly(b, i == g ? 1 : 0);
}

/// Applies the i-th basis derivation (d/dx_i, or eps d/deps) to a.
inline Poly apply_basis_der(const Backend& b, std::size_t i, const Poly& a) {
  if (b.is_dual()) return Poly::variable(b, 0) * a.partial(0);
  return a.partial(i);
}

class DerElement {
 public:
  DerElement() = default;
  explicit DerElement(const Backend& b) : backend_(&b), comps_(b.ngens(), Poly(b)) {}

  /// Builds sum_i comps[i] * B_i. Over the dual numbers the coefficient is
  /// reduced to its constant part, because eps annihilates the generator.
  DerElement(const Backend& b, std::vector<Poly> comps) : backend_(&b), comps_(std::move(comps)) {
    if (comps_.size() != b.ngens()) throw std::invalid_argument("derivation needs one coefficient per generator");
    normalize();
  }

  static DerElement basis(const Backend& b, std::size_t i) {
    DerElement d(b);
    d.comps_.at(i) = Poly(b, 1);
    return d;
  }

  /// Recovers a derivation from its values on the algebra generators.
  static DerElement from_images(const Backend& b, const std::vector<Poly>& images) {
    if (b.is_dual()) {
      const Poly& v = images.at(0);
      if (!courant::is_zero(v.constant_term()))
        throw std::invalid_argument("a derivation of the dual numbers must map eps into (eps)");
      return DerElement(b, {Poly(b, v.coefficient(Monomial::var(0)))});
    }
    return DerElement(b, images);
  }

  const Backend& backend() const { return *backend_; }
  const std::vector<Poly>& comps() const { return comps_; }
  const Poly& comp(std::size_t i) const { return comps_.at(i); }

  bool is_zero() const {
    for (const auto& c : comps_)
      if (!c.is_zero()) return false;
    return true;
  }

  /// D(x_g) for the g-th generator.
  Poly image(std::size_t g) const {
    Poly r(*backend_);
    for (std::size_t i = 0; i < comps_.size(); ++i) r += comps_[i] * basis_der_on_generator(*backend_, i, g);
    return r;
  }

  Poly apply(const Poly& a) const {
    check(a);
    Poly r(*backend_);
    for (std::size_t g = 0; g < backend_->ngens(); ++g) {
      Poly pa = a.partial(g);
      if (!pa.is_zero()) r += pa * image(g);
    }
    return r;
  }

  friend bool operator==(const DerElement& a, const DerElement& b) { return a.comps_ == b.comps_; }

  friend DerElement operator+(const DerElement& a, const DerElement& b) {
    a.same(b);
    std::vector<Poly> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] + b.comps_[i];
    return DerElement(*a.backend_, std::move(c));
  }
  friend DerElement operator-(const DerElement& a, const DerElement& b) {
    a.same(b);
    std::vector<Poly> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] - b.comps_[i];
    return DerElement(*a.backend_, std::move(c));
  }
  friend DerElement operator*(const Poly& f, const DerElement& d) {
    std::vector<Poly> c(d.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = f * d.comps_[i];
    return DerElement(*d.backend_, std::move(c));
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (comps_[i].is_zero()) continue;
      if (!s.empty()) s += " + ";
      std::string gen = backend_->is_dual() ? "d(" + backend_->var(0) + ")" : "d(" + backend_->var(i) + ")";
      s += "(" + comps_[i].to_string() + ")*" + gen;
    }
    return s.empty() ? "0" : s;
  }

 private:
  void normalize() {
    if (backend_->is_dual()) comps_[0] = Poly(*backend_, comps_[0].constant_term());
  }
  void check(const Poly& a) const {
    if (a.backend() && a.backend() != backend_)
      throw BackendMismatch("backend mismatch: derivation over " + backend_->describe() + " applied to " +
                            a.backend()->describe());
  }
  void same(const DerElement& o) const {
    if (backend_ != o.backend_) throw BackendMismatch("backend mismatch between derivations");
  }

  const Backend* backend_ = nullptr;
  std::vector<Poly> comps_;
};

inline DerElement commutator(const DerElement& d, const DerElement& e) {
  if (&d.backend() != &e.backend()) throw BackendMismatch("backend mismatch between derivations");
  const Backend& b = d.backend();
  std::vector<Poly> images(b.ngens());
  for (std::size_t g = 0; g < b.ngens(); ++g) images[g] = d.apply(e.image(g)) - e.apply(d.image(g));
  return DerElement::from_images(b, images);
}

/// A symmetric multiderivation A x ... x A -> A, stored by its values on
/// sorted tuples of algebra generators.
class SymMultiDerivation {
 public:
  SymMultiDerivation(const Backend& b, std::size_t arity) : backend_(&b), arity_(arity) {
    if (arity == 0) throw std::invalid_argument("arity must be positive");
  }

  std::size_t arity() const { return arity_; }
  const Backend& backend() const { return *backend_; }
  const std::map<std::vector<std::size_t>, Poly>& table() const { return table_; }

  /// Sets the value on a generator tuple (order irrelevant). Over the dual
  /// numbers eps*P(eps,...) must vanish, since P(eps*eps, ...) = 0.
  void set(std::vector<std::size_t> gens, const Poly& value) {
    if (gens.size() != arity_) throw std::invalid_argument("arity mismatch");
    for (auto g : gens)
      if (g >= backend_->ngens()) throw std::out_of_range("generator index out of range");
    if (backend_->is_dual() && !(Poly::variable(*backend_, 0) * value).is_zero())
      throw std::invalid_argument("value violates the derivation rule on eps*eps = 0");
    std::sort(gens.begin(), gens.end());
    if (value.is_zero()) {
      table_.erase(gens);
    } else {
      table_[gens] = value;
    }
  }

  Poly value(std::vector<std::size_t> gens) const {
    std::sort(gens.begin(), gens.end());
    auto it = table_.find(gens);
    return it == table_.end() ? Poly(*backend_) : it->second;
  }

  Poly eval(const std::vector<Poly>& args) const {
    if (args.size() != arity_) throw std::invalid_argument("arity mismatch: expected " + std::to_string(arity_) +
                                                           " arguments, got " + std::to_string(args.size()));
    std::vector<std::vector<Poly>> partials(arity_);
    for (std::size_t j = 0; j < arity_; ++j)
      for (std::size_t g = 0; g < backend_->ngens(); ++g) partials[j].push_back(args[j].partial(g));
    Poly out(*backend_);
    std::vector<std::size_t> idx(arity_, 0);
    const std::size_t n = backend_->ngens();
    if (n == 0) return out;
    for (;;) {
      Poly prod(*backend_, 1);
      for (std::size_t j = 0; j < arity_ && !prod.is_zero(); ++j) prod *= partials[j][idx[j]];
      if (!prod.is_zero()) out += prod * value(idx);
      std::size_t k = 0;
      while (k < arity_ && ++idx[k] == n) idx[k++] = 0;
      if (k == arity_) break;
    }
    return out;
  }

  /// Image of D_1 v ... v D_p under Sym^p Der -> SDer^p:
  /// P(a_1..a_p) = sum over permutations of prod_j D_{pi(j)}(a_j).
  static SymMultiDerivation from_symmetric_product(const std::vector<DerElement>& ders) {
    if (ders.empty()) throw std::invalid_argument("empty symmetric product");
    const Backend& b = ders[0].backend();
    SymMultiDerivation p(b, ders.size());
    const std::size_t n = b.ngens();
    std::vector<std::size_t> gens(ders.size(), 0);
    if (n == 0) return p;
    for (;;) {
      if (std::is_sorted(gens.begin(), gens.end())) {
        std::vector<std::size_t> perm(ders.size());
        std::iota(perm.begin(), perm.end(), 0);
        Poly v(b);
        do {
          Poly prod(b, 1);
          for (std::size_t j = 0; j < perm.size(); ++j) prod *= ders[perm[j]].image(gens[j]);
          v += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (!v.is_zero()) p.table_[gens] = v;
      }
      std::size_t k = 0;
      while (k < gens.size() && ++gens[k] == n) gens[k++] = 0;
      if (k == gens.size()) break;
    }
    return p;
  }

  bool is_zero() const { return table_.empty(); }

 private:
  const Backend* backend_;
  std::size_t arity_;
  std::map<std::vector<std::size_t>, Poly> table_;
};

}  // namespace courant
