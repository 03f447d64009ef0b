#include "test_support.hpp"

using namespace courant;
using namespace courant::testing;

namespace {

RothElement R(const MetricModule& m, std::string_view text) { return parse_roth(m, text); }

}  // namespace

TEST(StandardStructure, DerivedBracketIsDorfman) {
  for (std::size_t n : {1u, 2u}) {
    CourantStructure s = make_standard_courant(n);
    auto probes = dorfman_probes(s.module());
    for (const auto& u : probes)
      for (const auto& v : probes)
        ASSERT_EQ(derived_bracket(s.m, u, v), dorfman(u, v, n)) << u.to_string() << ", " << v.to_string();
  }
}

TEST(StandardStructure, AnchorIsProjection) {
  CourantStructure s = make_standard_courant(2);
  const MetricModule& m = s.module();
  Poly a = poly(m.backend(), "x1^2*x2");
  EXPECT_EQ(anchor(s.m, vec(m, "x2*e1"), a), poly(m.backend(), "2*x1*x2^2"));
  EXPECT_TRUE(anchor(s.m, vec(m, "f1"), a).is_zero());
  EXPECT_EQ(anchor_der(s.m, 1), DerElement::basis(m.backend(), 1));
}

TEST(QuadraticLie, So3DerivedBracketIsTheCrossProduct) {
  CourantStructure s = so3();
  const MetricModule& m = s.module();
  auto c = so3_constants();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      ModuleElement expect(m);
      for (std::size_t k = 0; k < 3; ++k) expect[k] = Poly(m.backend(), c[i][j][k]);
      ASSERT_EQ(derived_bracket(s.m, ModuleElement::basis(m, i), ModuleElement::basis(m, j)), expect);
    }
  EXPECT_TRUE(verify_courant(s.m).ok());
}

TEST(QuadraticLie, Rejections) {
  auto gram = identity_gram(3);
  gram[2][2] = 2;
  EXPECT_THROW(make_quadratic_lie(so3_constants(), gram), std::invalid_argument);
  auto c = so3_constants();
  c[1][0][2] = 1;
  EXPECT_THROW(make_quadratic_lie(c, identity_gram(3)), std::invalid_argument);
  EXPECT_THROW(make_quadratic_lie(so3_constants(), identity_gram(2)), std::invalid_argument);
}

TEST(VerifyCourant, RoutesAgreeOnKnownStructures) {
  for (const CourantStructure& s : {so3(), make_standard_courant(1)}) {
    CourantReport rep = verify_courant(s.m);
    EXPECT_TRUE(rep.ok());
    EXPECT_TRUE(rep.agree);
  }
}

TEST(VerifyCourant, MutationsAreRejectedByBothRoutes) {
  CourantStructure s = so3();
  int tried = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        CMap m = s.m;
        m.value({i, j})[k] += Poly(m.backend(), 1);
        CourantReport rep = verify_courant(m);
        ASSERT_FALSE(rep.ok()) << i << j << k;
        ASSERT_TRUE(rep.agree) << i << j << k;
        ++tried;
      }
  EXPECT_EQ(tried, 27);
}

TEST(VerifyCourant, NonzeroSelfBracketIsFound) {
  // a valid degree 3 element whose self bracket pairs e with f
  CourantStructure s = make_standard_courant(1);
  const MetricModule& m = s.module();
  CMap bad = apply_J(R(m, "-d(x) ∧ f + d(x) ∧ e"), s.conn);
  ASSERT_TRUE(cmap_verify(bad).ok);
  CourantReport rep = verify_courant(bad);
  EXPECT_FALSE(rep.ok());
  EXPECT_TRUE(rep.agree);
}

TEST(Morphisms, So3Automorphisms) {
  CourantStructure s = so3();
  const MetricModule& m = s.module();
  const Backend& b = m.backend();
  PolyMatrix cyc(3, std::vector<Poly>(3, Poly(b)));
  cyc[1][0] = cyc[2][1] = cyc[0][2] = Poly(b, 1);
  EXPECT_TRUE(verify_morphism(s.m, s.m, ModuleMap(m, m, {}, cyc)).ok);
  EXPECT_EQ(cmap_pushforward(s.m, ModuleMap(m, m, {}, cyc)), s.m);

  PolyMatrix swap(3, std::vector<Poly>(3, Poly(b)));
  swap[1][0] = swap[0][1] = swap[2][2] = Poly(b, 1);
  MorphismReport rep = verify_morphism(s.m, s.m, ModuleMap(m, m, {}, swap));
  EXPECT_FALSE(rep.ok);
  EXPECT_GT(rep.failed_condition, 0);
  EXPECT_FALSE(rep.message.empty());
}

TEST(Differential, SquaresToZeroAndCommutesWithJ) {
  Sampler rng(61);
  CourantStructure s = make_standard_courant(1);
  const MetricModule& m = s.module();
  for (int t = 0; t < 20; ++t) {
    int r = rng.uniform(0, 3);
    RothElement phi = rng.roth(m, r, 2);
    RothElement d = deformation_differential(s, phi);
    ASSERT_TRUE(deformation_differential(s, d).is_zero());
    ASSERT_EQ(apply_J(d, s.conn, r + 1), deformation_differential(s, apply_J(phi, s.conn, r)));
  }
  // delta a = {Theta, a} sends x to its differential f
  EXPECT_EQ(deformation_differential(s, R(m, "x")), R(m, "f"));
  EXPECT_EQ(deformation_differential(s, R(m, "x^2")), R(m, "2*x * f"));
}

TEST(Cohomology, So3LowDegrees) {
  CourantStructure s = so3();
  CohomologyTable tab = cohomology_dims(s, 2, 0, 0);
  EXPECT_TRUE(tab.delta_squared_zero);
  EXPECT_TRUE(tab.euler_ok);
  EXPECT_TRUE(tab.counts_ok);
  ASSERT_NE(tab.find(0, 0), nullptr);
  // H^0 is the constants; H^1 is the center of so(3)
  EXPECT_EQ(tab.find(0, 0)->dim, 1u);
  EXPECT_EQ(tab.find(1, 0)->dim, center_dimension(so3_constants()));
  EXPECT_EQ(tab.find(1, 0)->dim, 0u);
  // H^2 of a semisimple Lie algebra vanishes; H^3 is not computed here
  EXPECT_EQ(tab.find(2, 0)->dim, 0u);
}

TEST(Cohomology, StandardStructureBlocks) {
  CourantStructure s = make_standard_courant(1);
  CohomologyTable tab = cohomology_dims(s, 3, -1, 1);
  EXPECT_TRUE(tab.delta_squared_zero) << tab.message;
  EXPECT_TRUE(tab.euler_ok) << tab.message;
  EXPECT_TRUE(tab.counts_ok) << tab.message;
  for (const auto& c : tab.cells) ASSERT_EQ(c.chain_dim, block_basis(s.module(), c.r, c.d).size());
  // every block element has the stated internal degree
  for (const auto& x : block_basis(s.module(), 2, 1)) ASSERT_EQ(internal_degree(x), 1);
}

TEST(MaurerCartan, TrivialDeformationsExtend) {
  CourantStructure s = make_standard_courant(1);
  const MetricModule& m = s.module();
  RothBracket br(s.conn);
  for (const char* xi : {"x^2 * e ∧ f", "x * d(x)", "x^2 * d(x) + e ∧ f"}) {
    for (std::size_t k = 1; k <= 3; ++k) {
      auto full = trivial_deformation(s, R(m, xi), k + 1);
      std::vector<RothElement> series(full.begin(), full.begin() + long(k));
      McReport rep = mc_extend(s, series, full[k]);
      ASSERT_TRUE(rep.valid) << xi << " k=" << k;
      ASSERT_TRUE(rep.obstruction_is_cocycle);
      ASSERT_TRUE(rep.accepted);
      ASSERT_TRUE(mc_bruteforce_coefficient(s, full, k + 1).is_zero());
      for (std::size_t j = 1; j <= k + 1; ++j)
        ASSERT_EQ(mc_bruteforce_coefficient(s, full, j), mc_residual(br, s.theta, full, j));
    }
  }
}

TEST(MaurerCartan, WrongCandidateIsRejected) {
  CourantStructure s = make_standard_courant(1);
  const MetricModule& m = s.module();
  auto full = trivial_deformation(s, R(m, "x^2 * e ∧ f"), 2);
  RothElement wrong = full[1] + R(m, "x * d(x) ∧ e");
  ASSERT_FALSE(deformation_differential(s, R(m, "x * d(x) ∧ e")).is_zero());
  McReport rep = mc_extend(s, {full[0]}, wrong);
  EXPECT_TRUE(rep.valid);
  EXPECT_FALSE(rep.accepted);
  EXPECT_FALSE(mc_bruteforce_coefficient(s, {full[0], wrong}, 2).is_zero());

  McReport broken = mc_extend(s, {R(m, "x * d(x) ∧ e")}, std::nullopt);
  EXPECT_FALSE(broken.valid);
  EXPECT_EQ(broken.failed_order, 1);
}
