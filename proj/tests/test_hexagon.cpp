#include "qlev/hexagon.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace qlev;

namespace {

/// (1/sqrt(2pi)) int e^{x/2} sech(x) e^{-ixy} dx, integrated on [-60, 60] in pieces.
cplx psi_by_quadrature(double y) {
  using boost::math::quadrature::gauss_kronrod;
  auto re = [y](double x) { return std::exp(0.5 * x) * sech(x) * std::cos(x * y); };
  auto im = [y](double x) { return -std::exp(0.5 * x) * sech(x) * std::sin(x * y); };
  double r = 0.0, i = 0.0;
  for (int k = -30; k < 30; ++k) {
    r += gauss_kronrod<double, 61>::integrate(re, 2.0 * k, 2.0 * k + 2.0, 15, 1e-15);
    i += gauss_kronrod<double, 61>::integrate(im, 2.0 * k, 2.0 * k + 2.0, 15, 1e-15);
  }
  return cplx(r, i) / std::sqrt(2.0 * pi);
}

HexagonInputs synthetic(cplx m4, cplx h0, cplx f0, cplx p4, int alpha) {
  HexagonInputs in;
  in.s_half_m4 = m4;
  in.s_half_0 = h0;
  in.s_full_0 = f0;
  in.s_full_4 = p4;
  in.s_half = [](double) { return cplx(-1.0); };
  in.s_full = [](double) { return cplx(-1.0); };
  in.alpha = alpha;
  return in;
}

}  // namespace

TEST(SpecialFunctions, Values) {
  EXPECT_NEAR(std::abs(psi(0.0) - std::sqrt(pi)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eta_plus(0.0) - cplx(0.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eta_minus(0.0) - cplx(0.0, -1.0)), 0.0, 1e-15);
  for (double s : {-50.0, -3.0, -0.1, 0.0, 0.7, 50.0}) {
    EXPECT_NEAR(std::abs(eta_plus(s)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(eta_minus(s)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(phi_function(s)), 1.0, 1e-15);
    EXPECT_TRUE(std::isfinite(std::abs(psi(s))));
  }
}

TEST(SpecialFunctions, PsiIsFourierTransform) {
  for (double y : {0.0, 0.5, -0.5, 2.0, -2.0}) {
    const cplx q = psi_by_quadrature(y);
    EXPECT_NEAR(std::abs(q - psi(y)), 0.0, 1e-8) << y;
  }
}

TEST(SpecialFunctions, PsiBarSquaredIdentities) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double xi = -20.0 + 40.0 * i / 999.0;
    const cplx a = psi_bar(xi) * psi_bar(xi);
    const cplx b = psi_bar(-xi) * psi_bar(-xi);
    worst = std::max(worst, std::abs(a - cplx(0.0, pi) * sech(pi * xi) * eta_minus(xi)));
    worst = std::max(worst, std::abs(b + cplx(0.0, pi) * sech(pi * xi) * eta_plus(xi)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Det4, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  auto rc = [&] { return cplx(g(rng), g(rng)); };
  for (int t = 0; t < 100; ++t) {
    const cplx a = rc(), b = rc(), c = rc(), d = rc(), e = rc(), f = rc();
    const cplx brute = structured_matrix(a, b, c, d, e, f).determinant();
    EXPECT_LT(std::abs(det4_structured(a, b, c, d, e, f) - brute), 1e-12 * std::max(1.0, std::abs(brute)));
  }
}

TEST(Det4, SpecialCases) {
  const cplx a(0.3, 1.0), b(-0.2, 0.5), e(1.1, -0.4), f(0.0, 2.0);
  EXPECT_NEAR(std::abs(det4_structured(a, b, 0.0, 0.0, e, f) - (a * a - b * b) * (e * e - f * f)), 0.0, 1e-14);
  EXPECT_EQ(det4_structured(a, a, cplx(1.0, 2.0), cplx(0.5), e, f), cplx(0.0));
}

TEST(QLimit, TwoChannels) {
  const auto q = q_limit(Model({2, 0.0, {1.0, 0.0}}));
  EXPECT_EQ(q.alpha, -1);
  EXPECT_NEAR(std::abs(q.q_half_full - cplx(0.5, 0.5)), 0.0, 1e-4);
  EXPECT_NEAR(std::abs(q.q_full_half - cplx(-0.5, 0.5)), 0.0, 1e-4);
  const auto p = q_limit(Model({2, 0.0, {0.0, 3.0}}));
  EXPECT_EQ(p.alpha, 1);
  EXPECT_NEAR(std::abs(p.q_half_full - cplx(-0.5, -0.5)), 0.0, 1e-4);
  EXPECT_NEAR(std::abs(p.q_full_half - cplx(0.5, -0.5)), 0.0, 1e-4);
  EXPECT_THROW(q_limit(Model({2, 0.0, {1.0, 1.0}})), NotIntricate);
}

TEST(QLimit, FourChannels) {
  const auto q = q_limit(Model({4, 0.0, {1.0, 0.0, 2.0, 0.0}}));
  EXPECT_NEAR(std::abs(q.q_half_full + 0.5 * cplx(1.0, 1.0) * static_cast<double>(q.alpha)), 0.0, 1e-4);
}

TEST(Hexagon, BlockDiagonalEdgesAndConstantGammaSix) {
  const auto g = hexagon_symbol(Model({2, 0.0, {1.0, 0.0}}));
  for (int j : {1, 5, 6})
    for (double x : {0.0, 0.4, 3.0}) {
      const auto m = g.gamma(j, x);
      EXPECT_EQ((m.topRightCorner<2, 2>().cwiseAbs().maxCoeff()), 0.0);
      EXPECT_EQ((m.bottomLeftCorner<2, 2>().cwiseAbs().maxCoeff()), 0.0);
    }
  const cplx expect = g.inputs().s_half_m2 * g.inputs().s_full_2;
  for (double s : {-30.0, -1.0, 0.0, 2.5, 30.0}) EXPECT_NEAR(std::abs(g.det(6, s) - expect), 0.0, 1e-12);
}

TEST(Hexagon, IntricateTwoChannelCaseFour) {
  const auto g = hexagon_symbol(Model({2, 0.0, {1.0, 0.0}}));
  const auto w = hexagon_winding(g);
  ASSERT_EQ(w.classification.which, HexagonCase::Generic);
  ASSERT_TRUE(w.classification.intricate);
  const auto& p = *w.classification.pattern;
  EXPECT_EQ(p.p2, 3);
  EXPECT_EQ(p.c2, cplx(0.0, 1.0));
  EXPECT_EQ(p.c4, cplx(0.0, -1.0));
  EXPECT_NEAR(std::abs(p.det3() + 1.0), 0.0, 1e-15);
  EXPECT_TRUE(check_hexagon_pattern(g, p).matched);
  EXPECT_LT(w.max_vertex_jump, 1e-6);
  EXPECT_LT(w.max_unimodularity_defect, 1e-6);
  EXPECT_NEAR(w.vertical, 1.5, 1e-3);
  EXPECT_NEAR(w.total, 1.0, 1e-3);
}

TEST(Hexagon, NonIntricateTwoChannelGeneric) {
  const auto g = hexagon_symbol(Model({2, 0.0, {0.7, -1.3}}));
  const auto w = hexagon_winding(g);
  ASSERT_EQ(w.classification.which, HexagonCase::Generic);
  EXPECT_FALSE(w.classification.intricate);
  EXPECT_EQ(w.classification.pattern->p2, 4);
  EXPECT_EQ(w.classification.pattern->c2, cplx(1.0));
  EXPECT_TRUE(check_hexagon_pattern(g, *w.classification.pattern).matched);
  EXPECT_NEAR(std::abs(g.det(3, 0.3) - 1.0), 0.0, 1e-4);
}

TEST(Hexagon, CaseTablesOnSyntheticBoundaryData) {
  const cplx I(0.0, 1.0);
  struct Row {
    cplx m4, p4;
    int alpha;
    HexagonCase which;
  };
  for (const Row& r : {Row{1.0, 1.0, -1, HexagonCase::BothResonant}, Row{1.0, -1.0, 1, HexagonCase::LeftResonant},
                       Row{-1.0, 1.0, -1, HexagonCase::RightResonant}, Row{-1.0, -1.0, 1, HexagonCase::Generic}}) {
    const HexagonSymbol g(synthetic(r.m4, -I, I, r.p4, r.alpha));
    const auto c = classify_hexagon(g.inputs());
    ASSERT_EQ(c.which, r.which);
    EXPECT_TRUE(check_hexagon_pattern(g, *c.pattern).matched) << to_string(r.which);
  }
  const HexagonSymbol both(synthetic(1.0, -I, I, 1.0, 1));
  for (double xi : {0.0, 0.3, 2.0}) EXPECT_NEAR(std::abs(both.det(4, xi) - I * eta_plus(xi)), 0.0, 1e-12);
  for (const auto& [m4, p4, which] : {std::tuple{cplx(1.0), cplx(-1.0), HexagonCase::LeftResonant},
                                      std::tuple{cplx(-1.0), cplx(1.0), HexagonCase::RightResonant}}) {
    const HexagonSymbol g(synthetic(m4, -1.0, -1.0, p4, 0));
    const auto c = classify_hexagon(g.inputs());
    ASSERT_EQ(c.which, which);
    EXPECT_TRUE(check_hexagon_pattern(g, *c.pattern).matched);
  }
  EXPECT_EQ(classify_hexagon(synthetic(0.3, -I, I, 1.0, 1)).which, HexagonCase::Unclassified);
}

TEST(Hexagon, RequiresZeroFluxEvenN) {
  EXPECT_THROW(hexagon_symbol(Model({3, 0.0, {1.0, 0.0, 0.0}})), std::invalid_argument);
  EXPECT_THROW(hexagon_symbol(Model({2, 0.5, {1.0, 0.0}})), std::invalid_argument);
}

TEST(Hexagon, FourChannelIntricateVerticalEdges) {
  const auto g = hexagon_symbol(Model({4, 0.0, {1.0, 0.0, 2.0, 0.0}}));
  const auto w = hexagon_winding(g, true);
  ASSERT_TRUE(w.classification.intricate);
  ASSERT_TRUE(w.classification.pattern.has_value());
  EXPECT_TRUE(check_hexagon_pattern(g, *w.classification.pattern).matched);
  EXPECT_LT(w.max_unimodularity_defect, 1e-6);
}
