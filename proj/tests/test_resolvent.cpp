#include "qlev/bound_states.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace qlev;

namespace {

/// int_a^b dw/pi (2cos w - z)^{-1} by adaptive Gauss-Kronrod on real and imaginary parts.
/// The integrands are shifted by 1 so that the relative tolerance acts as an absolute one.
cplx quad_piece(cplx z, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  auto re = [z](double w) {
    const double d = 2.0 * std::cos(w) - z.real();
    return 1.0 + d / (d * d + z.imag() * z.imag());
  };
  auto im = [z](double w) {
    const double d = 2.0 * std::cos(w) - z.real();
    return 1.0 + z.imag() / (d * d + z.imag() * z.imag());
  };
  const double r = gauss_kronrod<double, 31>::integrate(re, a, b, 12, 1e-12) - (b - a);
  const double i = gauss_kronrod<double, 31>::integrate(im, a, b, 12, 1e-12) - (b - a);
  return cplx(r, i) / pi;
}

/// Breakpoints at the peak w0 and geometrically away from it, so each piece sees a smooth integrand.
cplx quad_resolvent(cplx z) {
  const double x = z.real();
  if (std::abs(x) >= 2.0) return quad_piece(z, 0.0, pi);
  const double w0 = std::acos(x / 2.0);
  std::vector<double> cuts{0.0, w0, pi};
  for (double h = std::max(std::abs(z.imag()), 1e-6); h < pi; h *= 4.0) {
    if (w0 - h > 0.0) cuts.push_back(w0 - h);
    if (w0 + h < pi) cuts.push_back(w0 + h);
  }
  std::sort(cuts.begin(), cuts.end());
  cplx sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) sum += quad_piece(z, cuts[k], cuts[k + 1]);
  return sum;
}

/// r(x + i0) from quadrature at eps_k = 0.05 2^{-k}, Richardson in eps.
cplx quad_boundary(double x) {
  const int rungs = 7;
  std::vector<std::vector<cplx>> t(rungs);
  for (int i = 0; i < rungs; ++i) {
    t[i].push_back(quad_resolvent(cplx(x, 0.05 * std::pow(2.0, -i))));
    for (int k = 1; k <= i; ++k) {
      const double f = std::pow(2.0, k);
      t[i].push_back(t[i][k - 1] + (t[i][k - 1] - t[i - 1][k - 1]) / (f - 1.0));
    }
  }
  return t[rungs - 1][rungs - 1];
}

}  // namespace

TEST(ChannelResolvent, BoundaryValueAtZeroIsHalfI) {
  const cplx oracle = quad_boundary(0.0);
  EXPECT_NEAR(std::abs(oracle - cplx(0.0, 0.5)), 0.0, 1e-9);
  const cplx closed = channel_resolvent(EnergyArg::plus(0.0), 0.0);
  EXPECT_NEAR(std::abs(closed - cplx(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(channel_resolvent(EnergyArg::minus(0.0), 0.0) - cplx(0.0, -0.5)), 0.0, 1e-15);
}

TEST(ChannelResolvent, OutsideTheCut) {
  const cplx q3 = quad_resolvent(3.0);
  EXPECT_NEAR(q3.real(), -0.4472135954999579, 1e-10);
  EXPECT_NEAR(std::abs(channel_resolvent(cplx(3.0)) - q3), 0.0, 1e-10);
  EXPECT_NEAR(channel_resolvent(cplx(3.0)).real(), -1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(channel_resolvent(cplx(-3.0)).real(), 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(channel_resolvent(EnergyArg::plus(3.0), 0.0).real(), -1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(channel_resolvent(EnergyArg::plus(-3.0), 0.0).imag(), 0.0);
}

TEST(ChannelResolvent, PrincipalValueVanishesOnTheCut) {
  for (double x : {-1.9, -0.5, 0.7, 1.9}) {
    const cplx q = quad_boundary(x);
    EXPECT_NEAR(q.real(), 0.0, 1e-8) << x;
    const cplx c = channel_resolvent(EnergyArg::plus(x), 0.0);
    EXPECT_EQ(c.real(), 0.0);
    EXPECT_NEAR(c.imag(), q.imag(), 1e-8 * std::max(1.0, std::abs(c.imag()))) << x;
  }
}

TEST(ChannelResolvent, MatchesQuadratureOffTheCut) {
  double worst = 0.0;
  for (int a = 0; a < 40; ++a)
    for (int b = 0; b < 25; ++b) {
      const double x = -5.0 + 10.0 * a / 39.0;
      double y = -2.0 + 4.0 * b / 24.0;
      if (std::abs(y) < 0.05) y = y < 0 ? -0.05 : 0.05;
      const cplx z(x, y);
      worst = std::max(worst, std::abs(channel_resolvent(z) - quad_resolvent(z)));
    }
  EXPECT_LT(worst, 1e-9);
}

TEST(ChannelResolvent, HerglotzAndBranchSymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    const cplx z(u(rng), std::abs(u(rng)) + 1e-6);
    EXPECT_GT(channel_resolvent(z).imag(), 0.0);
    EXPECT_NEAR(std::abs(channel_resolvent(std::conj(z)) - std::conj(channel_resolvent(z))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(channel_resolvent(-z) + channel_resolvent(z)), 0.0, 1e-14);
  }
}

TEST(ChannelResolvent, ThresholdIsSingular) {
  EXPECT_THROW(channel_resolvent(cplx(2.0)), ThresholdSingularity);
  EXPECT_THROW(channel_resolvent(EnergyArg::plus(-2.0), 0.0), ThresholdSingularity);
  EXPECT_THROW(channel_resolvent(cplx(1.0)), std::domain_error);
}

TEST(BsMatrix, RealSymmetricOutsideTheSpectrum) {
  const Model m({2, 0.0, {1.0, 1.0}});
  const CMatrix b = bs_matrix(m, EnergyArg::complex(5.0));
  const double r7 = -1.0 / std::sqrt(45.0), r3 = -1.0 / std::sqrt(5.0);
  EXPECT_NEAR(std::abs(b(0, 0) - (1.0 + 0.5 * (r7 + r3))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b(1, 1) - (1.0 + 0.5 * (r7 + r3))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b(0, 1) - 0.5 * (r3 - r7)), 0.0, 1e-14);
  EXPECT_LT((b - b.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(b.imag().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BsMatrix, AntiHermitianPartHasOpenChannelRank) {
  const Model m({2, 0.0, {1.0, 1.0}});
  const CMatrix b = bs_matrix(m, EnergyArg::plus(0.5));
  const CMatrix im = (b - b.adjoint()) / cplx(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(im);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-14);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 1e-10;
  EXPECT_EQ(rank, 1);

  const Model h({3, 0.4, {1.0, -0.3, 0.7}});
  const double lam = 0.1;
  const CMatrix bh = bs_matrix(h, EnergyArg::plus(lam));
  Eigen::SelfAdjointEigenSolver<CMatrix> eh((bh - bh.adjoint()) / cplx(0.0, 2.0));
  int rh = 0;
  for (Eigen::Index i = 0; i < eh.eigenvalues().size(); ++i) rh += eh.eigenvalues()(i) > 1e-10;
  EXPECT_EQ(rh, h.fiber_dimension(lam));
}

TEST(BsMatrix, ZeroSitesUsePlusOneSign) {
  const Model m({3, 0.2, {0.0, -2.0, 0.0}});
  const CMatrix b = bs_matrix(m, EnergyArg::complex(cplx(0.3, 1.0)));
  EXPECT_EQ(b(0, 0), cplx(1.0));
  EXPECT_EQ(b(2, 2), cplx(1.0));
  EXPECT_EQ(b(0, 1), cplx(0.0));
}

TEST(MMatrix, InverseResidual) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nd(2, 6);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-6.5, 6.5);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = nd(rng);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    const Model m({n, std::uniform_real_distribution<double>(0.0, 2.0)(rng), v});
    const double lam = u(rng);
    if (m.is_threshold(lam, 1e-9)) continue;
    const CMatrix b = bs_matrix(m, EnergyArg::plus(lam));
    try {
      const CMatrix mm = m_matrix_of(b);
      EXPECT_LT((mm * b - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
      ++checked;
    } catch (const NonInvertible&) {
    }
  }
  EXPECT_GT(checked, 95);
}

TEST(MMatrix, SingularAtDiscreteEigenvalue) {
  const Model m({2, 0.0, {10.0, 10.0}});
  const auto ev = find_discrete(m);
  ASSERT_FALSE(ev.empty());
  for (const auto& e : ev) {
    Eigen::JacobiSVD<CMatrix> svd(bs_matrix(m, EnergyArg::complex(e.lambda)));
    EXPECT_LT(svd.singularValues().minCoeff(), 1e-8);
    EXPECT_THROW(m_matrix(m, EnergyArg::complex(e.lambda)), NonInvertible);
  }
}
