#pragma once

#include "qlev/resolvent.hpp"

#include <functional>
#include <variant>

namespace qlev {

struct ThresholdEnergy : std::domain_error {
  using std::domain_error::domain_error;
};

struct ExtrapolationDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// beta_j(lambda) = |(lambda - lambda_j)^2 - 4|^{1/4}
inline double beta_weight(double lambda, double lambda_j) {
  const double d = lambda - lambda_j;
  return std::pow(std::abs((d - 2.0) * (d + 2.0)), 0.25);
}

struct ScatteringSample {
  double lambda = 0.0;
  std::vector<int> open_channels;
  CMatrix matrix;

  double unitarity_defect() const {
    const auto d = matrix.rows();
    return (matrix * matrix.adjoint() - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }
};

/// Entries 1 - 2i beta_j^{-1} beta_j'^{-1} <e_j, v M(lambda+i0) v e_j'> for the listed channels.
inline CMatrix s_block(const Model& m, const CMatrix& mm, double lambda, const std::vector<int>& js,
                       cplx coupling = cplx(0.0, -2.0)) {
  const Eigen::VectorXd w = m.sqrt_abs_v();
  const CMatrix vmv = w.asDiagonal() * mm * w.asDiagonal();
  const auto d = static_cast<Eigen::Index>(js.size());
  CMatrix s(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    const CVector ea = m.unit_vector(js[a]);
    const double ba = beta_weight(lambda, m.channel(js[a]).lambda);
    for (Eigen::Index b = 0; b < d; ++b) {
      const CVector eb = m.unit_vector(js[b]);
      const double bb = beta_weight(lambda, m.channel(js[b]).lambda);
      s(a, b) = (a == b ? 1.0 : 0.0) + coupling * ea.dot(vmv * eb) / (ba * bb);
    }
  }
  return s;
}

inline ScatteringSample s_matrix(const Model& m, double lambda, cplx coupling = cplx(0.0, -2.0)) {
  if (m.is_threshold(lambda)) throw ThresholdEnergy("scattering matrix requested at a threshold");
  ScatteringSample out;
  out.lambda = lambda;
  out.open_channels = m.open_channels(lambda);
  if (out.open_channels.empty()) throw std::domain_error("energy outside the continuous spectrum");
  const CMatrix mm = m_matrix(m, EnergyArg::plus(lambda));
  out.matrix = s_block(m, mm, lambda, out.open_channels, coupling);
  return out;
}

/// Energy just inside the spectrum on the side where the channels of level k are open.
inline double approach_energy(const Model& m, int level_k, Side side, double eps) {
  const double lt = m.levels().at(level_k - 1).lambda_tilde;
  return side == Side::Lower ? lt - 2.0 + eps : lt + 2.0 - eps;
}

/// Compression of S to the channels of level k at an energy where they are open.
inline CMatrix level_block(const Model& m, int level_k, double lambda) {
  const CMatrix mm = m_matrix(m, EnergyArg::plus(lambda));
  return s_block(m, mm, lambda, m.levels().at(level_k - 1).member_js);
}

struct RichardsonResult {
  CMatrix value;
  double change = 0.0;  ///< distance between the two best estimates
};

/// Richardson extrapolation to h = 0 of samples taken at h_m = h_0 2^{-m}, expansion in integer powers of h.
inline RichardsonResult richardson(const std::vector<CMatrix>& samples) {
  const std::size_t n = samples.size();
  std::vector<std::vector<CMatrix>> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i].push_back(samples[i]);
    double f = 1.0;
    for (std::size_t k = 1; k <= i; ++k) {
      f *= 2.0;
      t[i].push_back(t[i][k - 1] + (t[i][k - 1] - t[i - 1][k - 1]) / (f - 1.0));
    }
  }
  RichardsonResult r;
  r.value = t[n - 1][n - 1];
  r.change = n > 1 ? (t[n - 1][n - 1] - t[n - 2][n - 2]).cwiseAbs().maxCoeff() : 0.0;
  return r;
}

/// eps_m = 1e-3 * 4^{-m}, so sqrt(eps) halves at each rung.
inline std::vector<double> extrapolation_ladder(int rungs = 7, double eps0 = 1e-3) {
  std::vector<double> e;
  for (int m = 0; m < rungs; ++m) e.push_back(eps0 * std::pow(4.0, -m));
  return e;
}

/// Limit as eps -> 0+ of f(eps), Richardson in sqrt(eps). The ladder starts at 1e-3 and moves closer to the
/// threshold (by factors of 100) when the expansion radius is smaller than the first rung.
inline RichardsonResult extrapolate_to_threshold(const std::function<CMatrix(double)>& f, double tol = 1e-6) {
  RichardsonResult best;
  best.change = std::numeric_limits<double>::infinity();
  for (double eps0 : {1e-3, 1e-5, 1e-7, 1e-9}) {
    std::vector<CMatrix> samples;
    for (double eps : extrapolation_ladder(7, eps0)) samples.push_back(f(eps));
    auto r = richardson(samples);
    if (r.change < best.change) best = r;
    if (r.change < tol) return r;
  }
  if (!(best.change < 100.0 * tol)) throw ExtrapolationDiverged("threshold limit did not stabilise");
  return best;
}

enum class ThresholdClass {
  PlusOne,
  MinusOne,
  PlusIdentity2,
  MinusIdentity2,
  Reflection,
  IntricatePlusI,
  IntricateMinusI,
  Unclassified
};

inline const char* to_string(ThresholdClass c) {
  switch (c) {
    case ThresholdClass::PlusOne: return "PlusOne";
    case ThresholdClass::MinusOne: return "MinusOne";
    case ThresholdClass::PlusIdentity2: return "PlusIdentity2";
    case ThresholdClass::MinusIdentity2: return "MinusIdentity2";
    case ThresholdClass::Reflection: return "Reflection";
    case ThresholdClass::IntricatePlusI: return "IntricatePlusI";
    case ThresholdClass::IntricateMinusI: return "IntricateMinusI";
    case ThresholdClass::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

inline std::optional<ThresholdClass> threshold_class_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ThresholdClass::Unclassified); ++i) {
    const auto c = static_cast<ThresholdClass>(i);
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

struct ThresholdLimit {
  ThresholdPoint threshold;
  CMatrix matrix;
  ThresholdClass classification = ThresholdClass::Unclassified;
  double a = 0.0;  ///< reflection parameters, meaningful for Reflection
  cplx b;
  double extrapolation_change = 0.0;
};

inline constexpr double classification_tolerance = 1e-4;

inline ThresholdClass classify_limit(const CMatrix& s, bool allow_intricate, double* a = nullptr, cplx* b = nullptr,
                                     double tol = classification_tolerance) {
  auto near = [&](cplx x, cplx y) { return std::abs(x.real() - y.real()) < tol && std::abs(x.imag() - y.imag()) < tol; };
  if (s.rows() == 1) {
    const cplx x = s(0, 0);
    if (near(x, 1.0)) return ThresholdClass::PlusOne;
    if (near(x, -1.0)) return ThresholdClass::MinusOne;
    if (allow_intricate && near(x, cplx(0.0, 1.0))) return ThresholdClass::IntricatePlusI;
    if (allow_intricate && near(x, cplx(0.0, -1.0))) return ThresholdClass::IntricateMinusI;
    return ThresholdClass::Unclassified;
  }
  if (s.rows() == 2) {
    const bool offzero = near(s(0, 1), 0.0) && near(s(1, 0), 0.0);
    if (offzero && near(s(0, 0), 1.0) && near(s(1, 1), 1.0)) return ThresholdClass::PlusIdentity2;
    if (offzero && near(s(0, 0), -1.0) && near(s(1, 1), -1.0)) return ThresholdClass::MinusIdentity2;
    const double aa = s(0, 0).real();
    const bool form = std::abs(s(0, 0).imag()) < tol && near(s(1, 1), -s(0, 0)) && near(s(1, 0), std::conj(s(0, 1)));
    if (form && std::abs(aa * aa + std::norm(s(0, 1)) - 1.0) < tol) {
      if (a) *a = aa;
      if (b) *b = s(0, 1);
      return ThresholdClass::Reflection;
    }
  }
  return ThresholdClass::Unclassified;
}

inline bool is_degenerate_zero_threshold(const Model& m, const ThresholdPoint& t) {
  return m.theta_is_zero() && m.n() % 2 == 0 && std::abs(t.energy) < level_tolerance;
}

inline ThresholdLimit threshold_limit(const Model& m, int level_k, Side side) {
  ThresholdLimit out;
  for (const auto& t : m.thresholds())
    if (t.level_k == level_k && t.side == side) out.threshold = t;
  auto f = [&](double eps) { return level_block(m, level_k, approach_energy(m, level_k, side, eps)); };
  const auto r = extrapolate_to_threshold(f);
  out.matrix = r.value;
  out.extrapolation_change = r.change;
  out.classification =
      classify_limit(out.matrix, is_degenerate_zero_threshold(m, out.threshold), &out.a, &out.b);
  return out;
}

inline std::vector<ThresholdLimit> all_threshold_limits(const Model& m) {
  std::vector<ThresholdLimit> out;
  for (const auto& l : m.levels())
    for (Side s : {Side::Lower, Side::Upper}) out.push_back(threshold_limit(m, l.k, s));
  return out;
}

struct ContinuityReport {
  double max_offdiagonal_at_edges = 0.0;  ///< largest |S_jj'| at an edge of I_j cap I_j', extrapolated in d^{1/4}
  double max_offdiagonal_at_offset = 0.0; ///< largest raw |S_jj'| at distance `offset` from such an edge
  double max_level_limit_change = 0.0;    ///< largest Richardson change over the level blocks
  bool ok = true;
};

/// Off-diagonal blocks between different bands vanish at the edges of their common interval.
/// They decay like d^{1/4} in the distance d to the edge, so the edge value is extrapolated linearly in d^{1/4}
/// from d = offset and d = offset / 100.
inline ContinuityReport algebra_continuity_check(const Model& m, double offset = 1e-6, double tol = 1e-3) {
  ContinuityReport rep;
  const auto& ch = m.channels();
  for (const auto& a : ch)
    for (const auto& b : ch) {
      if (a.j >= b.j || std::abs(a.lambda - b.lambda) < level_tolerance) continue;
      const double lo = std::max(a.band_lo, b.band_lo), hi = std::min(a.band_hi, b.band_hi);
      if (!(lo < hi)) continue;
      for (double dir : {1.0, -1.0}) {
        const double edge = dir > 0 ? lo : hi;
        if (m.is_threshold(edge + dir * offset, 1e-12)) continue;
        try {
          cplx s01[2], s10[2];
          double h[2];
          for (int i = 0; i < 2; ++i) {
            const double d = i == 0 ? offset : offset / 100.0;
            const double lam = edge + dir * d;
            const CMatrix s = s_block(m, m_matrix(m, EnergyArg::plus(lam)), lam, {a.j, b.j});
            s01[i] = s(0, 1);
            s10[i] = s(1, 0);
            h[i] = std::pow(d, 0.25);
          }
          rep.max_offdiagonal_at_offset = std::max({rep.max_offdiagonal_at_offset, std::abs(s01[0]), std::abs(s10[0])});
          auto limit = [&](const cplx* v) { return (v[1] * h[0] - v[0] * h[1]) / (h[0] - h[1]); };
          rep.max_offdiagonal_at_edges =
              std::max({rep.max_offdiagonal_at_edges, std::abs(limit(s01)), std::abs(limit(s10))});
        } catch (const NonInvertible&) {
        }
      }
    }
  for (const auto& l : m.levels())
    for (Side side : {Side::Lower, Side::Upper}) {
      try {
        const auto lim = threshold_limit(m, l.k, side);
        rep.max_level_limit_change = std::max(rep.max_level_limit_change, lim.extrapolation_change);
      } catch (const std::exception&) {
        rep.ok = false;
      }
    }
  rep.ok = rep.ok && rep.max_offdiagonal_at_edges < tol;
  return rep;
}

}  // namespace qlev
