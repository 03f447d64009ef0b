#include "test_support.hpp"

using namespace courant;
using namespace courant::testing;

namespace {

const Backend& xy() { return Backend::free_poly({"x", "y"}); }
const Backend& dual() { return Backend::dual_numbers(); }

std::vector<Rational> random_point(Sampler& rng, std::size_t n) {
  std::vector<Rational> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(rng.rational());
  return p;
}

}  // namespace

TEST(Rational, CanonicalForm) {
  EXPECT_EQ(make_rational(6, -4).get_str(), "-3/2");
  EXPECT_EQ(make_rational(0, 7).get_str(), "0");
  EXPECT_EQ(parse_rational("-10/4").get_str(), "-5/2");
  EXPECT_EQ(parse_rational("+3").get_str(), "3");
  EXPECT_THROW(make_rational(1, 0), std::domain_error);
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational("1//2"), ParseError);
  EXPECT_THROW(parse_rational("x"), ParseError);
}

TEST(Poly, ArithmeticExamples) {
  const Backend& b = Backend::free_poly({"x"});
  Poly x = Poly::variable(b, 0), one(b, 1);
  EXPECT_EQ((one + x) * (one - x), one - x * x);
  EXPECT_EQ(x + Poly(b), x);
  EXPECT_TRUE((x - x).is_zero());
  Poly eps = Poly::variable(dual(), 0);
  EXPECT_TRUE((eps * eps).is_zero());
  EXPECT_EQ((Poly(dual(), 1) + eps) * (Poly(dual(), 1) - eps), Poly(dual(), 1));
}

TEST(Poly, BackendMismatchIsRejected) {
  Poly x = Poly::variable(Backend::free_poly({"x"}), 0);
  Poly y = Poly::variable(Backend::free_poly({"y"}), 0);
  EXPECT_THROW(x + y, BackendMismatch);
  EXPECT_THROW(x * y, BackendMismatch);
}

TEST(Poly, ArithmeticMatchesPointEvaluation) {
  Sampler rng(11);
  for (int t = 0; t < 200; ++t) {
    Poly p = rng.poly(xy(), 3, 4), q = rng.poly(xy(), 3, 4);
    Rational c = rng.rational();
    auto pt = random_point(rng, 2);
    Rational vp = evaluate(p, pt), vq = evaluate(q, pt);
    ASSERT_EQ(evaluate(p * q, pt), vp * vq);
    ASSERT_EQ(evaluate(p + q, pt), vp + vq);
    ASSERT_EQ(evaluate(p - q, pt), vp - vq);
    ASSERT_EQ(evaluate(c * p, pt), c * vp);
  }
}

TEST(Poly, NormalFormIsUnique) {
  Sampler rng(12);
  for (int t = 0; t < 100; ++t) {
    Poly p = rng.poly(xy(), 3, 4), q = rng.poly(xy(), 3, 4);
    ASSERT_EQ(p * q, q * p);
    ASSERT_EQ((p + q) - q, p);
    ASSERT_EQ(parse_poly(xy(), p.to_string()), p);
  }
}

TEST(Poly, ParserAndPositions) {
  const Backend& b = xy();
  EXPECT_EQ(parse_poly(b, "3/2*x^2*y - 1").to_string(), "3/2*x^2*y - 1");
  EXPECT_EQ(parse_poly(b, "(x+y)^2"), parse_poly(b, "x^2 + 2*x*y + y^2"));
  EXPECT_EQ(parse_poly(dual(), "eps^2 + 1"), Poly(dual(), 1));
  try {
    parse_poly(b, "x + z");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse_poly(b, "x +"), ParseError);
  EXPECT_THROW(parse_poly(b, "(x"), ParseError);
}

TEST(Derivation, ApplyExamples) {
  const Backend& b = xy();
  Poly x = Poly::variable(b, 0), y = Poly::variable(b, 1);
  DerElement dx = DerElement::basis(b, 0);
  EXPECT_EQ(dx.apply(x * x * y), Poly(b, 2) * x * y);
  EXPECT_TRUE(dx.apply(Poly(b, 1)).is_zero());
  DerElement ed = DerElement::basis(dual(), 0);
  Poly eps = Poly::variable(dual(), 0);
  EXPECT_EQ(ed.apply(eps), eps);
  EXPECT_TRUE(ed.apply(Poly(dual(), 5)).is_zero());
}

TEST(Derivation, DualDerivationsAnnihilateEpsMultiples) {
  Poly eps = Poly::variable(dual(), 0);
  DerElement ed = DerElement::basis(dual(), 0);
  EXPECT_TRUE((eps * ed).is_zero());
}

TEST(Derivation, LeibnizOnRandomTriples) {
  Sampler rng(13);
  for (const Backend* b : {&xy(), &dual()}) {
    for (int t = 0; t < 200; ++t) {
      DerElement d = rng.derivation(*b, 2);
      Poly p = rng.poly(*b, 3, 3), q = rng.poly(*b, 3, 3);
      ASSERT_EQ(d.apply(p * q), d.apply(p) * q + p * d.apply(q)) << b->describe();
    }
  }
}

TEST(Derivation, CommutatorExamples) {
  const Backend& b = xy();
  Poly x = Poly::variable(b, 0);
  DerElement dx = DerElement::basis(b, 0), dy = DerElement::basis(b, 1);
  EXPECT_TRUE(commutator(dx, dy).is_zero());
  EXPECT_EQ(commutator(x * dx, dx), Poly(b, -1) * dx);
  EXPECT_TRUE(commutator(dx, dx).is_zero());
}

TEST(Derivation, CommutatorActsAsCommutatorOfOperators) {
  Sampler rng(14);
  for (int t = 0; t < 100; ++t) {
    DerElement d = rng.derivation(xy(), 2), e = rng.derivation(xy(), 2);
    Poly p = rng.poly(xy(), 3, 3);
    ASSERT_EQ(commutator(d, e).apply(p), d.apply(e.apply(p)) - e.apply(d.apply(p)));
  }
}

TEST(Derivation, CommutatorJacobi) {
  Sampler rng(15);
  for (int t = 0; t < 100; ++t) {
    DerElement d = rng.derivation(xy(), 2), e = rng.derivation(xy(), 2), f = rng.derivation(xy(), 2);
    DerElement s = commutator(d, commutator(e, f)) + commutator(e, commutator(f, d)) + commutator(f, commutator(d, e));
    ASSERT_TRUE(s.is_zero());
    ASSERT_EQ(commutator(d, e), Poly(xy(), -1) * commutator(e, d));
  }
}

TEST(SymMultiDerivation, DualExampleAndVanishingSymmetricProducts) {
  Poly eps = Poly::variable(dual(), 0);
  SymMultiDerivation p(dual(), 2);
  p.set({0, 0}, eps);
  EXPECT_EQ(p.eval({eps, eps}), eps);
  EXPECT_TRUE(p.eval({Poly(dual(), 1), eps}).is_zero());
  EXPECT_TRUE(p.eval({eps, eps * eps}).is_zero());
  // Sym^2 Der -> SDer^2 is zero: (eps d)(a)(eps d)(b) always carries eps^2
  DerElement ed = DerElement::basis(dual(), 0);
  EXPECT_TRUE(SymMultiDerivation::from_symmetric_product({ed, ed}).is_zero());
  EXPECT_FALSE(p.is_zero());
  EXPECT_THROW(p.eval({eps}), std::invalid_argument);
  EXPECT_THROW(p.set({0, 0}, Poly(dual(), 1)), std::invalid_argument);
}

TEST(SymMultiDerivation, DerivationInEachSlotAndSymmetry) {
  Sampler rng(16);
  for (int t = 0; t < 50; ++t) {
    SymMultiDerivation p(xy(), 2);
    p.set({0, 0}, rng.poly(xy(), 2));
    p.set({0, 1}, rng.poly(xy(), 2));
    p.set({1, 1}, rng.poly(xy(), 2));
    Poly a = rng.poly(xy(), 3, 3), b = rng.poly(xy(), 3, 3), c = rng.poly(xy(), 3, 3);
    ASSERT_EQ(p.eval({a * b, c}), a * p.eval({b, c}) + b * p.eval({a, c}));
    ASSERT_EQ(p.eval({a, b}), p.eval({b, a}));
  }
}

TEST(SymMultiDerivation, SymmetricProductOfDerivationsOverFreePoly) {
  const Backend& b = xy();
  DerElement dx = DerElement::basis(b, 0);
  Poly x = Poly::variable(b, 0);
  auto p = SymMultiDerivation::from_symmetric_product({dx, dx});
  EXPECT_EQ(p.eval({x, x}), Poly(b, 2));
  EXPECT_EQ(p.eval({x * x, x}), Poly(b, 4) * x);
}
