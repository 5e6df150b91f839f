#pragma once

#include "qlev/scattering.hpp"
#include "qlev/special_functions.hpp"

#include <map>

namespace qlev {

struct PhaseJumpTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RefinementLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Clockwise-positive winding in turns: -(1/2pi) times the sum of principal-branch increments.
inline double arg_variation(const std::vector<cplx>& values, double max_gap = pi / 2.0) {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(std::abs(values[i]) - 1.0) > 1e-6) throw std::domain_error("arg_variation expects unimodular values");
    if (i == 0) continue;
    const double d = std::arg(values[i] / values[i - 1]);
    if (std::abs(d) >= max_gap) throw PhaseJumpTooLarge("phase increment too large, refine the grid");
    total += d;
  }
  return -total / (2.0 * pi);
}

/// Samples f on [a,b] and bisects until consecutive phase increments are below max_step.
inline std::vector<std::pair<double, cplx>> adaptive_unimodular_samples(const std::function<cplx(double)>& f, double a,
                                                                      double b, int initial = 512,
                                                                      double max_step = 0.05) {
  std::vector<std::pair<double, cplx>> pts;
  for (int i = 0; i <= initial; ++i) {
    const double x = a + (b - a) * i / initial;
    pts.emplace_back(x, f(x));
  }
  for (int pass = 0; pass < 60; ++pass) {
    std::vector<std::pair<double, cplx>> next;
    bool refined = false;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      next.push_back(pts[i]);
      if (std::abs(std::arg(pts[i + 1].second / pts[i].second)) > max_step) {
        const double x = 0.5 * (pts[i].first + pts[i + 1].first);
        next.emplace_back(x, f(x));
        refined = true;
      }
    }
    next.push_back(pts.back());
    pts.swap(next);
    if (!refined) break;
    if (pts.size() > 1000000) throw RefinementLimit("unimodular sampling exceeded 1e6 points");
  }
  return pts;
}

inline double winding_of(const std::function<cplx(double)>& f, double a, double b) {
  const auto pts = adaptive_unimodular_samples(f, a, b);
  std::vector<cplx> vals;
  vals.reserve(pts.size());
  for (const auto& p : pts) vals.push_back(p.second);
  return arg_variation(vals);
}

struct PhaseSample {
  double lambda = 0.0;
  double arg = 0.0;  ///< unwrapped arg det S
};

struct PhaseTrace {
  double lo = 0.0, hi = 0.0;
  int dim = 0;
  std::vector<PhaseSample> samples;
  double variation = 0.0;
  double edge_correction = 0.0;  ///< turns between the outermost samples and the extrapolated endpoint limits
  bool edges_extrapolated = false;
  double max_unitarity_defect = 0.0;
  double max_det_mismatch = 0.0;  ///< |det S - conj(D)/D| with D = det B(lambda+i0)
  std::vector<double> skipped;    ///< energies where M(lambda+i0) does not exist
};

struct TraceOptions {
  int initial_points = 512;
  double max_step = 0.1;
  double edge_offset = 1e-9;
  std::size_t max_samples = 1000000;
};

namespace detail {

struct TracePoint {
  double u = 0.0;
  double lambda = 0.0;
  bool valid = false;
  cplx det;
  cplx d;  ///< det B(lambda+i0)
  double abs_d = 0.0;
};

}  // namespace detail

/// Phase trace of det S on the open interval (lo, hi) between consecutive thresholds.
inline PhaseTrace trace_interval(const Model& m, double lo, double hi, const TraceOptions& opt = {}) {
  PhaseTrace tr;
  tr.lo = lo;
  tr.hi = hi;
  tr.dim = m.fiber_dimension(0.5 * (lo + hi));
  const double w = hi - lo;
  // lambda = lo + w (3u^2 - 2u^3): uniform in u is uniform in sqrt(distance) near both ends
  auto to_lambda = [&](double u) { return lo + w * (3.0 * u * u - 2.0 * u * u * u); };
  const double u0 = std::sqrt(opt.edge_offset / (3.0 * w));

  auto eval = [&](double u) {
    detail::TracePoint p;
    p.u = u;
    p.lambda = to_lambda(u);
    if (!(p.lambda > lo && p.lambda < hi)) return p;
    try {
      const CMatrix b = bs_matrix(m, EnergyArg::plus(p.lambda));
      const CMatrix mm = m_matrix_of(b);
      const auto open = m.open_channels(p.lambda);
      const CMatrix s = s_block(m, mm, p.lambda, open);
      const auto d = s.rows();
      tr.max_unitarity_defect =
          std::max(tr.max_unitarity_defect, (s * s.adjoint() - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff());
      p.det = s.determinant();
      const cplx dd = b.determinant();
      p.d = dd;
      p.abs_d = std::abs(dd);
      tr.max_det_mismatch = std::max(tr.max_det_mismatch, std::abs(p.det - std::conj(dd) / dd));
      p.valid = true;
    } catch (const NonInvertible&) {
      tr.skipped.push_back(p.lambda);
    }
    return p;
  };

  std::vector<detail::TracePoint> pts;
  for (int i = 0; i <= opt.initial_points; ++i)
    pts.push_back(eval(u0 + (1.0 - 2.0 * u0) * i / opt.initial_points));

  // det S = conj(D)/D, so a full turn of det S is a half turn of D and cannot hide between two samples of D
  auto jump = [&](const detail::TracePoint& a, const detail::TracePoint& b) {
    if (!a.valid || !b.valid) return 0.0;
    return std::max(std::abs(std::arg(b.det / a.det)), 2.0 * std::abs(std::arg(b.d / a.d)));
  };

  for (int pass = 0; pass < 80; ++pass) {
    std::vector<detail::TracePoint> next;
    bool refined = false;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      next.push_back(pts[i]);
      const auto& a = pts[i];
      const auto& b = pts[i + 1];
      bool split = jump(a, b) > opt.max_step;
      // sharp dips of |det B| mark narrow resonances that a coarse grid can step over
      if (!split && b.u - a.u > 1e-12) {
        const bool dip_a = i > 0 && a.valid && pts[i - 1].valid && b.valid &&
                           a.abs_d < 0.5 * std::min(pts[i - 1].abs_d, b.abs_d);
        const bool dip_b = i + 2 < pts.size() && b.valid && a.valid && pts[i + 2].valid &&
                           b.abs_d < 0.5 * std::min(a.abs_d, pts[i + 2].abs_d);
        split = dip_a || dip_b;
      }
      if (split && b.u - a.u > 1e-15) {
        next.push_back(eval(0.5 * (a.u + b.u)));
        refined = true;
      }
    }
    next.push_back(pts.back());
    pts.swap(next);
    if (!refined) break;
    if (pts.size() > opt.max_samples) throw RefinementLimit("phase refinement exceeded the sample budget");
  }

  double acc = 0.0, start = 0.0;
  const detail::TracePoint* prev = nullptr;
  for (const auto& p : pts) {
    if (!p.valid) continue;
    if (prev) acc += std::arg(p.det / prev->det);
    else start = std::arg(p.det);
    tr.samples.push_back({p.lambda, start + acc});
    prev = &p;
  }
  tr.variation = -acc / (2.0 * pi);

  if (!tr.samples.empty()) {
    try {
      auto det_at = [&](double lam) {
        const CMatrix mm = m_matrix(m, EnergyArg::plus(lam));
        return CMatrix::Constant(1, 1, s_block(m, mm, lam, m.open_channels(lam)).determinant());
      };
      const cplx left = extrapolate_to_threshold([&](double eps) { return det_at(lo + eps); }).value(0, 0);
      const cplx right = extrapolate_to_threshold([&](double eps) { return det_at(hi - eps); }).value(0, 0);
      const cplx first = std::polar(1.0, tr.samples.front().arg);
      const cplx last = std::polar(1.0, tr.samples.back().arg);
      tr.edge_correction = -(std::arg(first / left) + std::arg(right / last)) / (2.0 * pi);
      tr.edges_extrapolated = true;
      tr.variation += tr.edge_correction;
    } catch (const std::exception&) {
    }
  }
  return tr;
}

struct VarResult {
  std::vector<PhaseTrace> traces;
  double total = 0.0;
  double max_unitarity_defect = 0.0;
  double max_det_mismatch = 0.0;
};

/// Inter-threshold intervals covering the continuous spectrum.
inline std::vector<std::pair<double, double>> spectral_intervals(const Model& m) {
  const auto e = m.threshold_energies();
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) out.emplace_back(e[i], e[i + 1]);
  return out;
}

inline VarResult var_det_s(const Model& m, const TraceOptions& opt = {}) {
  VarResult r;
  for (const auto& [lo, hi] : spectral_intervals(m)) {
    r.traces.push_back(trace_interval(m, lo, hi, opt));
    const auto& t = r.traces.back();
    r.total += t.variation;
    r.max_unitarity_defect = std::max(r.max_unitarity_defect, t.max_unitarity_defect);
    r.max_det_mismatch = std::max(r.max_det_mismatch, t.max_det_mismatch);
  }
  return r;
}

enum class EdgeKind { Down, Right, RightUpper, Up };

struct ContourEdge {
  EdgeKind kind;
  int level_k = 0;
  double lo = 0.0, hi = 0.0;  ///< energy range of horizontal edges, traversed left to right
};

/// Edge set of the comb: vertical pieces at each threshold and horizontal pieces partitioning the spectrum.
inline std::vector<ContourEdge> comb_edges(const Model& m) {
  const auto& lv = m.levels();
  const int mm = static_cast<int>(lv.size());
  const bool omit_right_m = m.theta_is_zero() && m.n() % 2 == 0;
  std::vector<ContourEdge> e;
  for (int k = 1; k <= mm; ++k) {
    e.push_back({EdgeKind::Down, k, lv[k - 1].lambda_tilde - 2.0, lv[k - 1].lambda_tilde - 2.0});
    if (k < mm) e.push_back({EdgeKind::Right, k, lv[k - 1].lambda_tilde - 2.0, lv[k].lambda_tilde - 2.0});
    else if (!omit_right_m) e.push_back({EdgeKind::Right, k, lv[mm - 1].lambda_tilde - 2.0, lv[0].lambda_tilde + 2.0});
  }
  for (int k = 1; k <= mm; ++k) {
    if (k >= 2) e.push_back({EdgeKind::RightUpper, k, lv[k - 2].lambda_tilde + 2.0, lv[k - 1].lambda_tilde + 2.0});
    e.push_back({EdgeKind::Up, k, lv[k - 1].lambda_tilde + 2.0, lv[k - 1].lambda_tilde + 2.0});
  }
  return e;
}

/// 1 + (1/2)(1 - eta(s))(S - 1), eta = eta_- on a lower threshold and eta_+ on an upper one.
inline cplx vertical_symbol_det(const CMatrix& s_limit, Side side, double s) {
  const cplx eta = side == Side::Lower ? eta_minus(s) : eta_plus(s);
  const auto d = s_limit.rows();
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix phi = id + 0.5 * (1.0 - eta) * (s_limit - id);
  return phi.determinant();
}

/// Winding of the vertical piece: lower thresholds run s from +inf to -inf, upper ones from -inf to +inf.
inline double vertical_winding(const CMatrix& s_limit, Side side, double s_max = 40.0) {
  auto f = [&](double t) {
    const double s = side == Side::Lower ? -t : t;
    return vertical_symbol_det(s_limit, side, s);
  };
  return winding_of(f, -s_max, s_max);
}

inline CMatrix canonical_matrix(ThresholdClass c, double a = 0.6, cplx b = cplx(0.8, 0.0)) {
  CMatrix m;
  switch (c) {
    case ThresholdClass::PlusOne: m = CMatrix::Constant(1, 1, 1.0); break;
    case ThresholdClass::MinusOne: m = CMatrix::Constant(1, 1, -1.0); break;
    case ThresholdClass::PlusIdentity2: m = CMatrix::Identity(2, 2); break;
    case ThresholdClass::MinusIdentity2: m = -CMatrix::Identity(2, 2); break;
    case ThresholdClass::Reflection:
      m.resize(2, 2);
      m << a, b, std::conj(b), -a;
      break;
    default: throw std::invalid_argument("no canonical matrix for this class");
  }
  return m;
}

/// Winding of the vertical piece for a classified threshold; intricate classes belong to the hexagon.
inline double eta_piece_winding(ThresholdClass c, Side side, double a = 0.6, cplx b = cplx(0.8, 0.0)) {
  if (c == ThresholdClass::IntricatePlusI || c == ThresholdClass::IntricateMinusI)
    throw std::invalid_argument("intricate thresholds are handled by the hexagon symbol");
  if (c == ThresholdClass::Unclassified) throw std::invalid_argument("unclassified threshold");
  return vertical_winding(canonical_matrix(c, a, b), side);
}

/// Contribution of a threshold class to C.
inline int correction_weight(ThresholdClass c) {
  switch (c) {
    case ThresholdClass::PlusOne: return 1;
    case ThresholdClass::PlusIdentity2: return 2;
    case ThresholdClass::Reflection: return 1;
    default: return 0;
  }
}

}  // namespace qlev
