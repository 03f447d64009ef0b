#include "test_support.hpp"

using namespace courant;
using namespace courant::testing;

namespace {

const Backend& xy() { return Backend::free_poly({"x", "y"}); }
const Backend& x1() { return Backend::free_poly({"x"}); }

const MetricModule& rank3(const Backend& b) {
  PolyMatrix g(3, std::vector<Poly>(3, Poly(b)));
  g[0][1] = g[1][0] = Poly(b, 1);
  g[2][2] = Poly(b, 1);
  g[0][0] = poly(b, "x");
  return MetricModule::make(b, {"e1", "e2", "e3"}, g);
}

RothElement R(const MetricModule& m, std::string_view text) { return parse_roth(m, text); }

bool both_odd(int a, int b) { return (a % 2) && (b % 2); }

}  // namespace

TEST(RothWedge, Examples) {
  const MetricModule& m = hyperbolic(xy());
  EXPECT_TRUE(R(m, "e1 ∧ e1").is_zero());
  EXPECT_EQ(R(m, "e1 ∧ e2"), -R(m, "e2 ∧ e1"));
  EXPECT_EQ(R(m, "d(x) ∧ e1"), R(m, "e1 ∧ d(x)"));
  EXPECT_EQ(R(m, "d(x) ∧ d(y)"), R(m, "d(y) ∧ d(x)"));
  EXPECT_FALSE(R(m, "d(x)^2").is_zero());
  EXPECT_EQ(R(m, "x * d(x)^2 ∧ e1").degree(), 5);
  EXPECT_EQ(wedge(R(m, "x"), R(m, "y * e1")), R(m, "x*y * e1"));
}

TEST(RothWedge, GradedCommutativeAndAssociative) {
  Sampler rng(31);
  const MetricModule& m = rank3(xy());
  for (int t = 0; t < 100; ++t) {
    int r1 = rng.uniform(0, 4), r2 = rng.uniform(0, 4), r3 = rng.uniform(0, 3);
    RothElement a = rng.roth(m, r1, 1), b = rng.roth(m, r2, 1), c = rng.roth(m, r3, 1);
    RothElement ba = wedge(b, a);
    ASSERT_EQ(wedge(a, b), both_odd(r1, r2) ? -ba : ba);
    ASSERT_EQ(wedge(wedge(a, b), c), wedge(a, wedge(b, c)));
  }
}

TEST(RothBracket, GeneratorExamples) {
  const MetricModule& m = hyperbolic(xy());
  RothBracket br(Connection::flat(m));
  EXPECT_EQ(br(R(m, "e1"), R(m, "e2")), R(m, "1"));
  EXPECT_TRUE(br(R(m, "e1"), R(m, "e1")).is_zero());
  EXPECT_EQ(br(R(m, "d(x)"), R(m, "x^2*y")), R(m, "-2*x*y"));
  EXPECT_EQ(br(R(m, "x^2*y"), R(m, "d(x)")), R(m, "2*x*y"));
  EXPECT_TRUE(br(R(m, "d(x)"), R(m, "d(y)")).is_zero());
  EXPECT_TRUE(br(R(m, "d(x)"), R(m, "e1")).is_zero());
  EXPECT_TRUE(br(R(m, "x"), R(m, "y")).is_zero());
  // the bracket lowers degree by two
  EXPECT_EQ(br(R(m, "e1 ∧ e2"), R(m, "x * e1")), R(m, "x * e1"));
  EXPECT_EQ(br(R(m, "d(x) ∧ d(x)"), R(m, "x^2")), R(m, "-4*x * d(x)"));
}

TEST(RothBracket, ConnectionTermsAppear) {
  const MetricModule& m = rank3(x1());
  Connection c = metrize(Connection::flat(m));
  RothBracket br(c);
  for (std::size_t a = 0; a < 3; ++a)
    EXPECT_EQ(br(R(m, "d(x)"), RothElement::vector(ModuleElement::basis(m, a))),
              -RothElement::vector(c.gamma(0, a)));
}

TEST(RothBracket, GradedAntisymmetryJacobiAndLeibniz) {
  Sampler rng(32);
  const MetricModule& m = rank3(xy());
  Connection c = rng.metric_connection(m, 1);
  RothBracket br(c);
  for (int t = 0; t < 60; ++t) {
    int r1 = rng.uniform(0, 3), r2 = rng.uniform(0, 3), r3 = rng.uniform(0, 3);
    RothElement a = rng.roth(m, r1, 1), b = rng.roth(m, r2, 1), d = rng.roth(m, r3, 1);
    RothElement ba = br(b, a);
    ASSERT_EQ(br(a, b), both_odd(r1, r2) ? ba : -ba);
    RothElement swap = br(b, br(a, d));
    ASSERT_EQ(br(a, br(b, d)), br(br(a, b), d) + (both_odd(r1, r2) ? -swap : swap));
    RothElement right = wedge(b, br(a, d));
    ASSERT_EQ(br(a, wedge(b, d)), wedge(br(a, b), d) + (both_odd(r1, r2) ? -right : right));
  }
}

TEST(RothBracket, FlatBracketOfDerivationsHasNoCurvature) {
  Sampler rng(33);
  const MetricModule& m = hyperbolic(xy());
  RothBracket br(Connection::flat(m));
  for (int t = 0; t < 20; ++t) {
    DerElement d = rng.derivation(xy(), 2), e = rng.derivation(xy(), 2);
    // {D, E} = -[D, E] for the flat connection
    ASSERT_EQ(br(RothElement::der(m, d), RothElement::der(m, e)), -RothElement::der(m, commutator(d, e)));
  }
}

TEST(ConnectionChange, ExpIntertwinesBrackets) {
  Sampler rng(34);
  const MetricModule& m = hyperbolic(x1());
  Connection c1 = rng.metric_connection(m, 2, 0.8), c2 = rng.metric_connection(m, 2, 0.8);
  ASSERT_FALSE(c1 == c2);
  ConnectionChange t(c1, c2);
  RothBracket b1(c1), b2(c2);
  for (int k = 0; k < 30; ++k) {
    RothElement u = rng.roth(m, rng.uniform(0, 4), 1), v = rng.roth(m, rng.uniform(0, 4), 1);
    ASSERT_EQ(t.exp(b1(u, v)), b2(t.exp(u), t.exp(v)));
    ASSERT_EQ(t.exp(wedge(u, v)), wedge(t.exp(u), t.exp(v)));
  }
  ConnectionChange back(c2, c1);
  RothElement u = rng.roth(m, 4, 2);
  EXPECT_EQ(back.exp(t.exp(u)), u);
}

TEST(ConnectionChange, TrivialOnEqualConnections) {
  const MetricModule& m = hyperbolic(x1());
  Connection c = Connection::flat(m);
  ConnectionChange t(c, c);
  RothElement u = R(m, "x * d(x)^2 ∧ e1");
  EXPECT_EQ(t.exp(u), u);
  EXPECT_THROW(ConnectionChange(Connection::flat(rank3(x1())), c), ModuleMismatch);
}

TEST(Pushforward, SwapIsAPoissonMorphism) {
  Sampler rng(35);
  const MetricModule& m = hyperbolic(xy());
  PolyMatrix swap{{Poly(xy()), Poly(xy(), 1)}, {Poly(xy(), 1), Poly(xy())}};
  ModuleMap g(m, m, {1, 0}, swap);
  EXPECT_TRUE(g.is_isometric());
  Connection src = rng.metric_connection(m, 1), dst = rng.metric_connection(m, 1);
  RothBracket bs(src), bd(dst);
  auto push = [&](const RothElement& u) { return roth_pushforward(u, g, src, dst); };
  EXPECT_EQ(push(R(m, "x * e1")), R(m, "y * e2"));
  for (int k = 0; k < 20; ++k) {
    RothElement u = rng.roth(m, rng.uniform(0, 3), 1), v = rng.roth(m, rng.uniform(0, 3), 1);
    ASSERT_EQ(push(bs(u, v)), bd(push(u), push(v)));
    ASSERT_EQ(push(wedge(u, v)), wedge(push(u), push(v)));
  }
}

TEST(Pushforward, NonIsometricMapIsRejected) {
  const MetricModule& m = hyperbolic(xy());
  PolyMatrix two{{Poly(xy(), 2), Poly(xy())}, {Poly(xy()), Poly(xy(), 2)}};
  ModuleMap g(m, m, {}, two);
  EXPECT_FALSE(g.is_isometric());
  Connection c = Connection::flat(m);
  EXPECT_THROW(roth_pushforward(R(m, "e1"), g, c, c), std::invalid_argument);
}
