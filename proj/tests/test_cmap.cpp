#include "test_support.hpp"

using namespace courant;
using namespace courant::testing;

namespace {

const Backend& xy() { return Backend::free_poly({"x", "y"}); }
const Backend& q() { return Backend::free_poly({}); }

bool both_odd(int a, int b) { return (a % 2) && (b % 2); }

// <x, y> e1 on Q^2 with the identity gram: not metric in any sense
CMap inner_times_e1() {
  const MetricModule& m = identity_module(q(), 2);
  CMap c = CMap::zero(m, 3);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) c.value({a, b}) = m.g(a, b) * ModuleElement::basis(m, 0);
  return c;
}

}  // namespace

TEST(CMapVerify, Examples) {
  EXPECT_TRUE(cmap_verify(so3().m).ok);
  EXPECT_TRUE(cmap_verify(make_standard_courant(2).m).ok);
  auto bad = cmap_verify(inner_times_e1());
  EXPECT_FALSE(bad.ok);
  EXPECT_FALSE(bad.message.empty());
  EXPECT_TRUE(cmap_verify(sder_counterexample().c).ok);
}

TEST(CMapVerify, RandomValidElementsPass) {
  Sampler rng(41);
  const MetricModule& m = hyperbolic(xy());
  Connection conn = rng.metric_connection(m, 1);
  for (int t = 0; t < 20; ++t) {
    int r = rng.uniform(2, 4);
    CMap c = rng.cmap(conn, r, 1);
    ASSERT_TRUE(cmap_verify(c).ok) << "degree " << r;
  }
}

TEST(CMapVerify, SymbolMutationIsDetected) {
  const MetricModule& m = hyperbolic(xy());
  Sampler rng(42);
  int caught = 0;
  for (int t = 0; t < 10; ++t) {
    CMap d = rng.raw_c2(m, 1);
    d.value({0}) = d.value({0}) + ModuleElement::basis(m, 0, Poly::variable(xy(), 1));
    if (!cmap_verify(d).ok) ++caught;
  }
  EXPECT_EQ(caught, 10);
}

TEST(CMapEval, QuadraticLieValues) {
  CourantStructure s = so3();
  const MetricModule& m = s.module();
  EXPECT_EQ(cmap_eval(s.m, {vec(m, "e1"), vec(m, "e2")}), vec(m, "e3"));
  EXPECT_EQ(cmap_eval(s.m, {vec(m, "e3"), vec(m, "e2")}), vec(m, "-e1"));
  EXPECT_EQ(cmap_eval(s.m, {vec(m, "e1 + e2"), vec(m, "e1 - e2")}), vec(m, "-2*e3"));
  EXPECT_THROW(cmap_eval(s.m, {vec(m, "e1")}), std::invalid_argument);
}

TEST(CMapEval, MetricIdentityAndLeibnizOnRandomElements) {
  Sampler rng(43);
  const MetricModule& m = hyperbolic(xy());
  Connection conn = rng.metric_connection(m, 1);
  for (int t = 0; t < 20; ++t) {
    CMap c = rng.cmap(conn, 3, 1);
    ModuleElement x = rng.vector(m, 1), y = rng.vector(m, 1), z = rng.vector(m, 1);
    Poly a = rng.poly(xy(), 2);
    // sigma(x)<y, z> = <C(x, y), z> + <y, C(x, z)>
    ASSERT_EQ(cmap_sigma(c, {x}, inner(y, z)), inner(cmap_eval(c, {x, y}), z) + inner(y, cmap_eval(c, {x, z})));
    // C(x, a y) = a C(x, y) + (sigma(x) a) y
    ASSERT_EQ(cmap_eval(c, {x, a * y}), a * cmap_eval(c, {x, y}) + cmap_sigma(c, {x}, a) * y);
    // <d_C a, z> = sigma(z) a
    ASSERT_EQ(inner(cmap_d(c, {}, a), z), cmap_sigma(c, {z}, a));
  }
}

TEST(CMapBracket, LowDegreeExamples) {
  const MetricModule& m = hyperbolic(xy());
  CMap e1 = CMap::vector(vec(m, "e1")), e2 = CMap::vector(vec(m, "x*e2"));
  EXPECT_EQ(cmap_bracket(e1, e2), CMap::scalar(m, poly(xy(), "x")));
  EXPECT_THROW(cmap_bracket(e1, CMap::scalar(m, poly(xy(), "x"))), std::invalid_argument);
  Connection flat = Connection::flat(m);
  CMap jdx = apply_J(parse_roth(m, "d(x)"), flat);
  // [-nabla_x, a] = -d a / dx
  EXPECT_EQ(cmap_bracket(jdx, CMap::scalar(m, poly(xy(), "x^2*y"))), CMap::scalar(m, poly(xy(), "-2*x*y")));
  EXPECT_EQ(insert(jdx, vec(m, "y*e1")), cmap_bracket(jdx, CMap::vector(vec(m, "y*e1"))));
  EXPECT_EQ(cmap_bracket(jdx, CMap::vector(vec(m, "x*e1"))), CMap::vector(vec(m, "-e1")));
}

TEST(CMapBracket, JacobiAndLeibniz) {
  Sampler rng(44);
  const MetricModule& m = hyperbolic(xy());
  Connection conn = rng.metric_connection(m, 1);
  for (int t = 0; t < 40; ++t) {
    int r1 = rng.uniform(1, 3), r2 = rng.uniform(1, 3), r3 = rng.uniform(1, 3);
    if (r1 + r2 + r3 < 5) continue;
    CMap a = rng.cmap(conn, r1, 1), b = rng.cmap(conn, r2, 1), c = rng.cmap(conn, r3, 1);
    CMap swap = cmap_bracket(b, cmap_bracket(a, c));
    ASSERT_EQ(cmap_bracket(a, cmap_bracket(b, c)), cmap_bracket(cmap_bracket(a, b), c) + (both_odd(r1, r2) ? -swap : swap))
        << r1 << r2 << r3;
    CMap ba = cmap_bracket(b, a);
    ASSERT_EQ(cmap_bracket(a, b), both_odd(r1, r2) ? ba : -ba);
    CMap right = cmap_wedge(b, cmap_bracket(a, c));
    ASSERT_EQ(cmap_bracket(a, cmap_wedge(b, c)), cmap_wedge(cmap_bracket(a, b), c) + (both_odd(r1, r2) ? -right : right));
  }
}

TEST(CMapWedge, ModesAgreeAndProductIsGradedCommutative) {
  Sampler rng(45);
  const MetricModule& m = hyperbolic(xy());
  Connection conn = rng.metric_connection(m, 1);
  for (int t = 0; t < 30; ++t) {
    int r1 = rng.uniform(0, 3), r2 = rng.uniform(0, 3);
    CMap a = rng.cmap(conn, r1, 1), b = rng.cmap(conn, r2, 1);
    CMap ab = cmap_wedge(a, b);
    ASSERT_EQ(ab, cmap_wedge(a, b, WedgeMode::Shuffle));
    CMap ba = cmap_wedge(b, a);
    ASSERT_EQ(ab, both_odd(r1, r2) ? -ba : ba);
  }
  CMap e1 = CMap::vector(vec(m, "e1")), e2 = CMap::vector(vec(m, "e2"));
  CMap w = cmap_wedge(e1, e2);
  // (e1 ∧ e2)(y) = e1 <e2, y> - <e1, y> e2
  EXPECT_EQ(cmap_eval(w, {vec(m, "e1")}), vec(m, "e1"));
  EXPECT_EQ(cmap_eval(w, {vec(m, "e2")}), vec(m, "-e2"));
}

TEST(CMapForm, RoundTrip) {
  Sampler rng(46);
  const MetricModule& m = hyperbolic(xy());
  Connection conn = rng.metric_connection(m, 1);
  for (int r = 0; r <= 4; ++r) {
    CMap c = rng.cmap(conn, r, 1);
    ASSERT_EQ(from_form(to_form(c)), c);
  }
  CForm f = to_form(so3().m);
  EXPECT_EQ(f.at({0, 1, 2}), Poly(q(), 1));
  EXPECT_EQ(f.at({1, 0, 2}), Poly(q(), -1));
}

TEST(SymbolTower, Examples) {
  // over Q there are no generators, so the first symbol level is empty
  SymbolTower so = symbol_tower(to_form(so3().m));
  ASSERT_EQ(so.levels.size(), 2u);
  EXPECT_TRUE(so.levels[1].empty());

  CourantStructure st = make_standard_courant(1);
  const MetricModule& m = st.module();
  SymbolTower tw = symbol_tower(to_form(st.m));
  ASSERT_EQ(tw.levels.size(), 2u);
  EXPECT_EQ(tw.levels[1].at({0}), to_form(CMap::vector(vec(m, "f"))));

  Connection flat = Connection::flat(m);
  CMap c4 = apply_J(parse_roth(m, "d(x)^2"), flat);
  SymbolTower t4 = symbol_tower(to_form(c4));
  ASSERT_EQ(t4.levels.size(), 3u);
  // J(d^2) = nabla_x ∧ nabla_x, whose second symbol is 2
  EXPECT_EQ(t4.levels[2].at({0, 0}), to_form(CMap::scalar(m, Poly(m.backend(), 2))));

  SymbolTower dual = symbol_tower(to_form(sder_counterexample().c));
  const Backend& d = Backend::dual_numbers();
  EXPECT_EQ(dual.levels[2].at({0, 0}), to_form(CMap::scalar(*sder_counterexample().mod, Poly::variable(d, 0))));
}

TEST(CMapPushforward, SwapPreservesTheStandardStructure) {
  CourantStructure st = make_standard_courant(2);
  const MetricModule& m = st.module();
  const Backend& b = m.backend();
  PolyMatrix p(4, std::vector<Poly>(4, Poly(b)));
  p[1][0] = p[0][1] = p[3][2] = p[2][3] = Poly(b, 1);
  ModuleMap g(m, m, {1, 0}, p);
  EXPECT_EQ(cmap_pushforward(st.m, g), st.m);
  EXPECT_TRUE(verify_morphism(st.m, st.m, g).ok);

  Sampler rng(47);
  Connection conn = rng.metric_connection(m, 1);
  for (int t = 0; t < 10; ++t) {
    CMap a = rng.cmap(conn, rng.uniform(1, 3), 1), c = rng.cmap(conn, rng.uniform(1, 3), 1);
    ASSERT_EQ(cmap_pushforward(cmap_bracket(a, c), g), cmap_bracket(cmap_pushforward(a, g), cmap_pushforward(c, g)));
  }

  PolyMatrix two(4, std::vector<Poly>(4, Poly(b)));
  for (std::size_t a = 0; a < 4; ++a) two[a][a] = Poly(b, 2);
  EXPECT_THROW(cmap_pushforward(st.m, ModuleMap(m, m, {}, two)), std::invalid_argument);
}
