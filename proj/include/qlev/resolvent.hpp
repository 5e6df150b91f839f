#pragma once

#include "qlev/model.hpp"

#include <Eigen/SVD>

namespace qlev {

struct ThresholdSingularity : std::domain_error {
  using std::domain_error::domain_error;
};

struct NonInvertible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EnergyMode { Complex, BoundaryPlus, BoundaryMinus };

struct EnergyArg {
  cplx value;
  EnergyMode mode = EnergyMode::Complex;

  static EnergyArg complex(cplx z) { return {z, EnergyMode::Complex}; }
  static EnergyArg plus(double lambda) { return {lambda, EnergyMode::BoundaryPlus}; }
  static EnergyArg minus(double lambda) { return {lambda, EnergyMode::BoundaryMinus}; }
};

/// r(w) = int_0^pi (2cos w' - w)^{-1} dw'/pi = -1/(sqrt(w-2) sqrt(w+2)), principal roots.
inline cplx channel_resolvent(cplx w) {
  if (w.imag() == 0.0 && std::abs(w.real()) <= 2.0) {
    if (std::abs(w.real()) == 2.0) throw ThresholdSingularity("channel resolvent evaluated at +-2");
    throw std::domain_error("channel resolvent on the cut needs a boundary side");
  }
  return -1.0 / (std::sqrt(w - 2.0) * std::sqrt(w + 2.0));
}

/// Boundary value r(x + i0*side), side = +1 or -1.
inline cplx channel_resolvent_boundary(double x, int side) {
  const double a = std::abs(x);
  if (a == 2.0) throw ThresholdSingularity("channel resolvent evaluated at +-2");
  if (a < 2.0) return cplx(0.0, side / std::sqrt((2.0 - x) * (2.0 + x)));
  return cplx(-std::copysign(1.0, x) / std::sqrt((a - 2.0) * (a + 2.0)), 0.0);
}

inline cplx channel_resolvent(const EnergyArg& e, double shift) {
  switch (e.mode) {
    case EnergyMode::Complex: return channel_resolvent(e.value - shift);
    case EnergyMode::BoundaryPlus: return channel_resolvent_boundary(e.value.real() - shift, +1);
    case EnergyMode::BoundaryMinus: return channel_resolvent_boundary(e.value.real() - shift, -1);
  }
  return {};
}

/// Sum_j r(z - lambda_j) P_j, the free resolvent at the boundary layer.
inline CMatrix boundary_green(const Model& m, const EnergyArg& e) {
  const int n = m.n();
  CMatrix g = CMatrix::Zero(n, n);
  for (const auto& c : m.channels()) g += channel_resolvent(e, c.lambda) * (c.xi * c.xi.adjoint());
  return g / static_cast<double>(n);
}

/// u + v^{1/2} G(z) v^{1/2}.
inline CMatrix bs_matrix(const Model& m, const EnergyArg& e) {
  const Eigen::VectorXd w = m.sqrt_abs_v();
  CMatrix b = w.asDiagonal() * boundary_green(m, e) * w.asDiagonal();
  b.diagonal() += m.sign_v().cast<cplx>();
  return b;
}

inline double condition_number(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / smin;
}

/// Inverse of B. Near thresholds B has entries of size eps^{-1/2}, so the LU and the residual are done in
/// extended precision.
inline CMatrix m_matrix_of(const CMatrix& b) {
  if (!(condition_number(b) < 1e12)) throw NonInvertible("Birman-Schwinger matrix is singular");
  using XMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
  const XMatrix bx = b.cast<std::complex<long double>>();
  const XMatrix inv = bx.partialPivLu().inverse();
  const long double res = (bx * inv - XMatrix::Identity(b.rows(), b.cols())).cwiseAbs().maxCoeff();
  if (!(res < 1e-10L)) throw NonInvertible("Birman-Schwinger inverse residual too large");
  return inv.cast<cplx>();
}

inline CMatrix m_matrix(const Model& m, const EnergyArg& e) { return m_matrix_of(bs_matrix(m, e)); }

}  // namespace qlev
