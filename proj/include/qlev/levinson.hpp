#pragma once

#include "qlev/bound_states.hpp"
#include "qlev/hexagon.hpp"

namespace qlev {

inline constexpr double residual_tolerance = 0.01;

enum class ReportStatus { Ok, Residual, Unclassified, AtThreshold, OracleMismatch, Failed };

inline const char* to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::Ok: return "ok";
    case ReportStatus::Residual: return "residual";
    case ReportStatus::Unclassified: return "unclassified";
    case ReportStatus::AtThreshold: return "at-threshold";
    case ReportStatus::OracleMismatch: return "oracle-mismatch";
    case ReportStatus::Failed: return "failed";
  }
  return "failed";
}

inline std::optional<ReportStatus> report_status_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ReportStatus::Failed); ++i) {
    const auto c = static_cast<ReportStatus>(i);
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

struct LevinsonOptions {
  bool with_oracle = true;
  bool with_comb = true;
  TraceOptions trace;
};

struct LevinsonReport {
  ModelParams params;
  IntricateInfo intricate;
  std::vector<ThresholdLimit> thresholds;
  VarResult var;
  int correction_c = 0;
  BoundStateReport bound;
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  /// Var plus the windings of the vertical comb pieces (hexagon edges 2-4 for the intricate pair).
  std::optional<double> comb_total;
  /// Var + N - #{j : s_jj(lambda_j -/+ 2) = 1}/2 from per-channel limits, only for theta strictly between 0 and pi.
  std::optional<double> channel_lhs;
  ReportStatus status = ReportStatus::Failed;
  std::string message;

  double var_det_s() const { return var.total; }
};

/// One-sided limits of the diagonal entries S_jj at both edges of I_j, indexed by channel.
inline std::vector<std::array<cplx, 2>> channel_edge_limits(const Model& m) {
  std::vector<std::array<cplx, 2>> out;
  for (const auto& ch : m.channels()) {
    auto entry = [&](double lam) { return s_block(m, m_matrix(m, EnergyArg::plus(lam)), lam, {ch.j}); };
    const cplx lo = extrapolate_to_threshold([&](double eps) { return entry(ch.band_lo + eps); }).value(0, 0);
    const cplx hi = extrapolate_to_threshold([&](double eps) { return entry(ch.band_hi - eps); }).value(0, 0);
    out.push_back({lo, hi});
  }
  return out;
}

inline double channel_formula_lhs(const Model& m, double var_total) {
  int plus = 0;
  for (const auto& e : channel_edge_limits(m))
    for (cplx z : e) plus += std::abs(z - 1.0) < classification_tolerance;
  return var_total + m.n() - 0.5 * plus;
}

inline bool theta_in_open_half(const Model& m) {
  return m.params().theta_over_pi > 0.0 && m.params().theta_over_pi < 1.0;
}

/// Winding of the vertical comb pieces; thresholds of the intricate pair are covered by the hexagon.
inline double vertical_part(const Model& m, const std::vector<ThresholdLimit>& limits, bool intricate) {
  std::vector<int> hex_levels;
  double total = 0.0;
  if (intricate) {
    hex_levels = {level_of_channel(m, m.n() / 2), level_of_channel(m, m.n())};
    total += hexagon_winding(hexagon_symbol(m), true).vertical;
  }
  for (const auto& t : limits) {
    if (std::find(hex_levels.begin(), hex_levels.end(), t.threshold.level_k) != hex_levels.end()) continue;
    total += vertical_winding(t.matrix, t.threshold.side);
  }
  return total;
}

inline LevinsonReport levinson_report(const Model& m, const LevinsonOptions& opt = {}) {
  LevinsonReport r;
  r.params = m.params();
  r.intricate = detect_intricate(m);
  try {
    r.thresholds = all_threshold_limits(m);
  } catch (const ExtrapolationDiverged& e) {
    r.message = e.what();
    return r;
  }
  bool unclassified = false;
  for (const auto& t : r.thresholds) {
    if (t.classification == ThresholdClass::Unclassified) unclassified = true;
    r.correction_c += correction_weight(t.classification);
  }
  try {
    r.var = var_det_s(m, opt.trace);
    r.bound = bound_state_report(m, opt.with_oracle);
  } catch (const std::exception& e) {
    r.message = e.what();
    return r;
  }
  if (unclassified) {
    r.status = ReportStatus::Unclassified;
    r.message = "threshold limit not of a canonical form";
    return r;
  }
  r.lhs = r.var.total + m.n() - 0.5 * r.correction_c - (r.intricate.is_intricate ? 0.5 : 0.0);
  r.residual = r.lhs - r.bound.total;
  try {
    if (opt.with_comb) r.comb_total = r.var.total + vertical_part(m, r.thresholds, r.intricate.is_intricate);
    if (theta_in_open_half(m)) r.channel_lhs = channel_formula_lhs(m, r.var.total);
  } catch (const std::exception& e) {
    r.message = e.what();
    return r;
  }
  if (r.bound.at_threshold) {
    r.status = ReportStatus::AtThreshold;
    r.message = "eigenvalue within 1e-8 of a threshold";
  } else if (opt.with_oracle && !r.bound.agreement) {
    r.status = ReportStatus::OracleMismatch;
  } else if (!(std::abs(r.residual) < residual_tolerance)) {
    r.status = ReportStatus::Residual;
  } else {
    r.status = ReportStatus::Ok;
  }
  return r;
}

}  // namespace qlev
