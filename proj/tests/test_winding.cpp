#include "qlev/levinson.hpp"

#include <gtest/gtest.h>

using namespace qlev;

namespace {

std::vector<cplx> sample(const std::function<cplx(double)>& f, double a, double b, int n) {
  std::vector<cplx> out;
  for (int i = 0; i <= n; ++i) out.push_back(f(a + (b - a) * i / n));
  return out;
}

}  // namespace

TEST(ArgVariation, EtaPlusIsHalfTurn) {
  EXPECT_NEAR(arg_variation(sample(eta_plus, -20.0, 20.0, 4000)), 0.5, 1e-3);
}

TEST(ArgVariation, EtaSquaredIsOneTurn) {
  auto em2 = [](double s) { return eta_minus(s) * eta_minus(s); };
  auto ep2 = [](double s) { return eta_plus(s) * eta_plus(s); };
  EXPECT_NEAR(arg_variation(sample(em2, 20.0, -20.0, 4000)), 1.0, 1e-3);
  EXPECT_NEAR(arg_variation(sample(ep2, -20.0, 20.0, 4000)), 1.0, 1e-3);
}

TEST(ArgVariation, ConstantIsZeroAndClockwiseIsPositive) {
  EXPECT_EQ(arg_variation(std::vector<cplx>(10, cplx(1.0))), 0.0);
  auto cw = [](double t) { return std::polar(1.0, -2.0 * pi * t); };
  EXPECT_NEAR(arg_variation(sample(cw, 0.0, 1.0, 100)), 1.0, 1e-12);
}

TEST(ArgVariation, RejectsCoarseOrNonUnimodularInput) {
  EXPECT_THROW(arg_variation({cplx(1.0), cplx(-1.0)}), PhaseJumpTooLarge);
  EXPECT_THROW(arg_variation({cplx(1.0), cplx(0.5)}), std::domain_error);
}

TEST(VarDetS, NearFreeIsZero) {
  const Model m({3, 0.4, {1e-4, -1e-4, 5e-5}});
  EXPECT_NEAR(var_det_s(m).total, 0.0, 0.01);
}

TEST(VarDetS, TwoChannelsSplitIntoDiagonalEntries) {
  const Model m({2, 0.0, {0.7, -1.3}});
  const auto var = var_det_s(m);
  auto s11 = [&](double lam) { return s_matrix(m, lam).matrix(0, 0); };
  const double v11 = winding_of(s11, -4.0 + 1e-9, -1e-9);
  const double v22 = winding_of([&](double lam) { return s_matrix(m, lam).matrix(0, 0); }, 1e-9, 4.0 - 1e-9);
  EXPECT_NEAR(var.total, v11 + v22, 1e-3);
  ASSERT_EQ(var.traces.size(), 2u);
  EXPECT_EQ(var.traces[0].dim, 1);
}

TEST(VarDetS, DeepWellClosesIdentity) {
  const Model m({2, 0.0, {10.0, 10.0}});
  const auto r = levinson_report(m);
  EXPECT_EQ(r.status, ReportStatus::Ok);
  EXPECT_NEAR(r.residual, 0.0, 0.01);
  EXPECT_LT(r.var.max_unitarity_defect, 1e-9);
}

TEST(Comb, EdgeSetShape) {
  const Model g({3, 0.3, {1.0, 0.0, 0.0}});
  int down = 0, up = 0, right = 0, right_upper = 0;
  for (const auto& e : comb_edges(g)) {
    down += e.kind == EdgeKind::Down;
    up += e.kind == EdgeKind::Up;
    right += e.kind == EdgeKind::Right;
    right_upper += e.kind == EdgeKind::RightUpper;
  }
  EXPECT_EQ(down, 3);
  EXPECT_EQ(up, 3);
  EXPECT_EQ(right, 3);
  EXPECT_EQ(right_upper, 2);

  const Model z({4, 0.0, {1.0, 0.0, 0.0, 0.0}});
  int zr = 0, zd = 0;
  for (const auto& e : comb_edges(z)) {
    zr += e.kind == EdgeKind::Right;
    zd += e.kind == EdgeKind::Down;
  }
  EXPECT_EQ(zd, static_cast<int>(z.levels().size()));
  EXPECT_EQ(zr, static_cast<int>(z.levels().size()) - 1);
}

TEST(EtaPieces, ClosedFormWindings) {
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::MinusOne, Side::Lower), 0.5, 1e-3);
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::MinusOne, Side::Upper), 0.5, 1e-3);
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::PlusOne, Side::Lower), 0.0, 1e-12);
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::PlusIdentity2, Side::Upper), 0.0, 1e-12);
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::MinusIdentity2, Side::Lower), 1.0, 1e-3);
  EXPECT_NEAR(eta_piece_winding(ThresholdClass::Reflection, Side::Lower, 0.6, 0.8), 0.5, 1e-3);
  EXPECT_THROW(eta_piece_winding(ThresholdClass::IntricatePlusI, Side::Lower), std::invalid_argument);
  EXPECT_THROW(eta_piece_winding(ThresholdClass::Unclassified, Side::Lower), std::invalid_argument);
}

TEST(EtaPieces, MinusOneDeterminantIsEta) {
  const CMatrix s = CMatrix::Constant(1, 1, -1.0);
  for (double x : {-3.0, -0.2, 0.0, 1.5}) {
    EXPECT_NEAR(std::abs(vertical_symbol_det(s, Side::Lower, x) - eta_minus(x)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(vertical_symbol_det(s, Side::Upper, x) - eta_plus(x)), 0.0, 1e-15);
  }
}

TEST(Correction, Weights) {
  EXPECT_EQ(correction_weight(ThresholdClass::PlusOne), 1);
  EXPECT_EQ(correction_weight(ThresholdClass::PlusIdentity2), 2);
  EXPECT_EQ(correction_weight(ThresholdClass::Reflection), 1);
  EXPECT_EQ(correction_weight(ThresholdClass::MinusOne), 0);
  EXPECT_EQ(correction_weight(ThresholdClass::MinusIdentity2), 0);
  EXPECT_EQ(correction_weight(ThresholdClass::IntricatePlusI), 0);
}

TEST(Levinson, TwoChannelGenericIsVarPlusTwo) {
  const Model m({2, 0.0, {0.7, -1.3}});
  const auto r = levinson_report(m);
  EXPECT_FALSE(r.intricate.is_intricate);
  EXPECT_EQ(r.correction_c, 0);
  EXPECT_NEAR(r.lhs, r.var.total + 2.0, 1e-12);
  EXPECT_EQ(r.status, ReportStatus::Ok);
}

TEST(Levinson, TwoChannelIntricateIsVarPlusThreeHalves) {
  const Model m({2, 0.0, {1.0, 0.0}});
  const auto r = levinson_report(m);
  EXPECT_TRUE(r.intricate.is_intricate);
  EXPECT_NEAR(r.lhs, r.var.total + 1.5, 1e-12);
  EXPECT_NEAR(r.residual, 0.0, 0.01);
  ASSERT_TRUE(r.comb_total.has_value());
  EXPECT_NEAR(*r.comb_total, r.bound.total, 0.01);
}

TEST(Levinson, ThreeChannelsRandomFluxCloses) {
  const Model m({3, 1.3 / pi, {0.48, -0.6, 0.64}});
  const auto r = levinson_report(m);
  EXPECT_EQ(r.status, ReportStatus::Ok);
  EXPECT_LT(std::abs(r.residual), 0.01);
  ASSERT_TRUE(r.channel_lhs.has_value());
  EXPECT_NEAR(*r.channel_lhs, r.lhs, 1e-9);
  ASSERT_TRUE(r.comb_total.has_value());
  EXPECT_NEAR(*r.comb_total, r.lhs, 0.01);
}
