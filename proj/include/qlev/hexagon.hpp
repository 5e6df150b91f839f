#pragma once

#include "qlev/winding.hpp"

#include <array>

namespace qlev {

struct NotIntricate : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Level index containing channel j.
inline int level_of_channel(const Model& m, int j) {
  for (const auto& l : m.levels())
    for (int jj : l.member_js)
      if (jj == j) return l.k;
  throw std::out_of_range("channel not found");
}

struct QLimits {
  cplx q_half_full;  ///< limit as lambda -> 0+ of the (N/2, N) coefficient
  cplx q_full_half;  ///< limit as lambda -> 0- of the (N, N/2) coefficient
  int alpha = 0;
};

/// beta_a(lambda)^{-2} (1/N) <xi_a, v M(lambda+i0) v xi_b>
inline cplx q_coefficient(const Model& m, int a, int b, double lambda) {
  const Eigen::VectorXd w = m.sqrt_abs_v();
  const CMatrix vmv = w.asDiagonal() * m_matrix(m, EnergyArg::plus(lambda)) * w.asDiagonal();
  const double beta = beta_weight(lambda, m.channel(a).lambda);
  return m.channel(a).xi.dot(vmv * m.channel(b).xi) / (static_cast<double>(m.n()) * beta * beta);
}

inline QLimits q_limit(const Model& m) {
  const auto info = detect_intricate(m);
  if (!info.is_intricate) throw NotIntricate("q-limits are defined for intricate models only");
  const int n = m.n();
  QLimits q;
  q.alpha = *info.alpha;
  auto one = [](cplx z) { return CMatrix::Constant(1, 1, z); };
  q.q_half_full = extrapolate_to_threshold([&](double eps) { return one(q_coefficient(m, n / 2, n, eps)); }).value(0, 0);
  q.q_full_half = extrapolate_to_threshold([&](double eps) { return one(q_coefficient(m, n, n / 2, -eps)); }).value(0, 0);
  return q;
}

/// Boundary data of the two channels meeting at the doubly degenerate threshold 0.
struct HexagonInputs {
  std::function<cplx(double)> s_half;  ///< diagonal S entry of channel N/2 on (-4, 0)
  std::function<cplx(double)> s_full;  ///< diagonal S entry of channel N on (0, 4)
  cplx s_half_m4 = -1.0, s_half_0 = -1.0;  ///< values at -4 and 0-
  cplx s_full_0 = -1.0, s_full_4 = -1.0;   ///< values at 0+ and 4
  cplx s_half_m2 = -1.0, s_full_2 = -1.0;  ///< values at the band centres -2 and 2
  int alpha = 0;
};

/// Diagonal S entry of channel j at lambda; near thresholds the one-sided limit from the open side is used.
inline cplx channel_diagonal(const Model& m, int j, double lambda, double guard = 1e-9) {
  auto entry = [&](double lam) {
    const CMatrix mm = m_matrix(m, EnergyArg::plus(lam));
    return s_block(m, mm, lam, {j});
  };
  for (const auto& t : m.thresholds()) {
    if (std::abs(lambda - t.energy) >= guard) continue;
    const double lj = m.channel(j).lambda;
    const bool right_open = std::abs(t.energy + 1e-6 - lj) < 2.0;
    const double e = t.energy;
    if (right_open) return extrapolate_to_threshold([&](double eps) { return entry(e + eps); }).value(0, 0);
    return extrapolate_to_threshold([&](double eps) { return entry(e - eps); }).value(0, 0);
  }
  return entry(lambda)(0, 0);
}

inline HexagonInputs hexagon_inputs(const Model& m) {
  const int n = m.n();
  if (!m.theta_is_zero() || n % 2 != 0) throw std::invalid_argument("hexagon symbol needs theta = 0 and even N");
  HexagonInputs in;
  const auto info = detect_intricate(m);
  in.alpha = info.is_intricate ? *info.alpha : 0;
  const int kh = level_of_channel(m, n / 2), kf = level_of_channel(m, n);
  in.s_half_m4 = threshold_limit(m, kh, Side::Lower).matrix(0, 0);
  in.s_half_0 = threshold_limit(m, kh, Side::Upper).matrix(0, 0);
  in.s_full_0 = threshold_limit(m, kf, Side::Lower).matrix(0, 0);
  in.s_full_4 = threshold_limit(m, kf, Side::Upper).matrix(0, 0);
  const double g = 1e-9;
  const cplx hm4 = in.s_half_m4, h0 = in.s_half_0, f0 = in.s_full_0, f4 = in.s_full_4;
  in.s_half = [m, n, hm4, h0, g](double lam) {
    if (lam <= -4.0 + g) return hm4;
    if (lam >= -g) return h0;
    return channel_diagonal(m, n / 2, lam);
  };
  in.s_full = [m, n, f0, f4, g](double lam) {
    if (lam <= g) return f0;
    if (lam >= 4.0 - g) return f4;
    return channel_diagonal(m, n, lam);
  };
  in.s_half_m2 = in.s_half(-2.0);
  in.s_full_2 = in.s_full(2.0);
  return in;
}

using Matrix4c = Eigen::Matrix4cd;

/// The six edge functions of the hexagon in the block layout [N/2 | N].
class HexagonSymbol {
public:
  explicit HexagonSymbol(HexagonInputs in) : in_(std::move(in)) {}

  const HexagonInputs& inputs() const { return in_; }

  static constexpr double param_max = 40.0;

  /// Edge j in 1..6 at parameter x (l for 1,5; xi for 2,4; s for 3,6).
  Matrix4c gamma(int j, double x) const {
    Matrix4c g = Matrix4c::Zero();
    switch (j) {
      case 1: {
        const double t = std::tanh(x);
        g.topLeftCorner<2, 2>() = 0.5 * jm() + 0.5 * in_.s_half(-2.0 + 2.0 * t) * jp();
        g.bottomRightCorner<2, 2>() = 0.5 * jm() + 0.5 * in_.s_full(2.0 + 2.0 * t) * jp();
        break;
      }
      case 5: {
        const double t = std::tanh(-x);
        g.topLeftCorner<2, 2>() = 0.5 * jp() + 0.5 * in_.s_half(-2.0 + 2.0 * t) * jm();
        g.bottomRightCorner<2, 2>() = 0.5 * jp() + 0.5 * in_.s_full(2.0 + 2.0 * t) * jm();
        break;
      }
      case 6: {
        g.topLeftCorner<2, 2>() = gamma6_block(in_.s_half_m2, x);
        g.bottomRightCorner<2, 2>() = gamma6_block(in_.s_full_2, x);
        break;
      }
      case 2:
      case 3:
      case 4: {
        const cplx e = j == 2 ? eta_minus(x) : j == 3 ? cplx(0.0, 1.0) : eta_plus(x);
        const double sign = j == 2 ? -1.0 : 1.0;
        const cplx ps = j == 2 ? psi_bar(x) : j == 3 ? psi_bar(0.0) : psi_bar(-x);
        const cplx hp = 0.5 * (in_.s_half_0 + in_.s_half_m4), hm = 0.5 * (in_.s_half_0 - in_.s_half_m4);
        const cplx fp = 0.5 * (in_.s_full_4 + in_.s_full_0), fm = 0.5 * (in_.s_full_4 - in_.s_full_0);
        g.topLeftCorner<2, 2>() = middle_block(sign * e, hp, hm);
        g.bottomRightCorner<2, 2>() = middle_block(sign * e, fp, fm);
        const double pre = 1.0 / (2.0 * std::sqrt(2.0 * pi));
        Eigen::Matrix2cd up, lo;
        up << -1.0, 1.0, -1.0, 1.0;
        lo << -1.0, -1.0, 1.0, 1.0;
        g.topRightCorner<2, 2>() = pre * cplx(1.0, 1.0) * static_cast<double>(in_.alpha) * ps * up;
        g.bottomLeftCorner<2, 2>() = pre * cplx(1.0, -1.0) * static_cast<double>(in_.alpha) * ps * lo;
        break;
      }
      default: throw std::out_of_range("hexagon edge index must be 1..6");
    }
    return g;
  }

  cplx det(int j, double x) const { return gamma(j, x).determinant(); }

  /// Parameter range of edge j in traversal order.
  static std::pair<double, double> traversal(int j) {
    switch (j) {
      case 1: return {0.0, param_max};
      case 2: return {param_max, 0.0};
      case 3: return {-param_max, param_max};
      case 4: return {0.0, param_max};
      case 5: return {param_max, 0.0};
      case 6: return {param_max, -param_max};
    }
    throw std::out_of_range("hexagon edge index must be 1..6");
  }

  /// Start and end vertex of edge j.
  Matrix4c start(int j) const { return gamma(j, traversal(j).first); }
  Matrix4c end(int j) const { return gamma(j, traversal(j).second); }

private:
  static Eigen::Matrix2cd jm() { return (Eigen::Matrix2cd() << 1.0, -1.0, -1.0, 1.0).finished(); }
  static Eigen::Matrix2cd jp() { return (Eigen::Matrix2cd() << 1.0, 1.0, 1.0, 1.0).finished(); }

  static Eigen::Matrix2cd gamma6_block(cplx x, double s) {
    const cplx f = phi_function(s);
    Eigen::Matrix2cd b;
    b << 1.0 + x, f * (x - 1.0), std::conj(f) * (x - 1.0), 1.0 + x;
    return 0.5 * b;
  }

  /// Common form of the diagonal blocks of edges 2, 3, 4 with e = -eta_-, i or eta_+.
  static Eigen::Matrix2cd middle_block(cplx e, cplx sp, cplx sm) {
    Eigen::Matrix2cd b;
    b << 1.0 + sp - e * sm, e + sm - e * sp, e - e * sp + sm, 1.0 - e * sm + sp;
    return 0.5 * b;
  }

  HexagonInputs in_;
};

inline HexagonSymbol hexagon_symbol(const Model& m) { return HexagonSymbol(hexagon_inputs(m)); }

enum class HexagonCase { Generic, LeftResonant, RightResonant, BothResonant, Unclassified };

inline const char* to_string(HexagonCase c) {
  switch (c) {
    case HexagonCase::Generic: return "generic";
    case HexagonCase::LeftResonant: return "left-resonant";
    case HexagonCase::RightResonant: return "right-resonant";
    case HexagonCase::BothResonant: return "both-resonant";
    case HexagonCase::Unclassified: return "unclassified";
  }
  return "unclassified";
}

/// Closed forms of det Gamma^2, det Gamma^4 (Gamma^3 is the latter at xi = 0).
struct HexagonPattern {
  cplx c2;
  int p2 = 0;  ///< det Gamma^2 = c2 eta_-^p2
  cplx c4;
  int p4 = 0;  ///< det Gamma^4 = c4 eta_+^p4

  cplx det2(double xi) const { return c2 * std::pow(eta_minus(xi), p2); }
  cplx det4(double xi) const { return c4 * std::pow(eta_plus(xi), p4); }
  cplx det3() const { return det4(0.0); }
};

struct HexagonClassification {
  HexagonCase which = HexagonCase::Unclassified;
  bool intricate = false;
  std::optional<HexagonPattern> pattern;
};

inline HexagonClassification classify_hexagon(const HexagonInputs& in, double tol = classification_tolerance) {
  auto near = [&](cplx x, cplx y) { return std::abs(x - y) < tol; };
  const cplx I(0.0, 1.0);
  HexagonClassification c;
  c.intricate = in.alpha != 0;
  const bool lm = near(in.s_half_m4, -1.0), lp = near(in.s_half_m4, 1.0);
  const bool rm = near(in.s_full_4, -1.0), rp = near(in.s_full_4, 1.0);
  if (c.intricate) {
    if (!(near(in.s_half_0, -I) && near(in.s_full_0, I))) return c;
    if (lp && rp) c = {HexagonCase::BothResonant, true, HexagonPattern{-I, 1, I, 1}};
    else if (lp && rm) c = {HexagonCase::LeftResonant, true, HexagonPattern{I, 2, I, 2}};
    else if (lm && rp) c = {HexagonCase::RightResonant, true, HexagonPattern{-I, 2, -I, 2}};
    else if (lm && rm) c = {HexagonCase::Generic, true, HexagonPattern{I, 3, -I, 3}};
    return c;
  }
  if (!(near(in.s_half_0, -1.0) && near(in.s_full_0, -1.0))) return c;
  if (lm && rm) c = {HexagonCase::Generic, false, HexagonPattern{1.0, 4, 1.0, 4}};
  else if (lp && rm) c = {HexagonCase::LeftResonant, false, HexagonPattern{1.0, 3, -1.0, 3}};
  else if (lm && rp) c = {HexagonCase::RightResonant, false, HexagonPattern{-1.0, 3, 1.0, 3}};
  return c;
}

struct HexagonWinding {
  std::array<double, 6> edge{};  ///< clockwise winding of det Gamma^j along its oriented edge
  double total = 0.0;
  double vertical = 0.0;  ///< edges 2, 3, 4
  double max_vertex_jump = 0.0;
  double max_unimodularity_defect = 0.0;
  HexagonClassification classification;
};

/// With vertical_only, edges 1, 5 and 6 are skipped and only the vertical part is filled in.
inline HexagonWinding hexagon_winding(const HexagonSymbol& g, bool vertical_only = false) {
  HexagonWinding w;
  for (int j = 1; j <= 6; ++j) {
    if (vertical_only && (j == 1 || j >= 5)) continue;
    const auto [a, b] = HexagonSymbol::traversal(j);
    // tanh-compactified coordinate u, x = atanh(u) capped at the parameter bound
    auto f = [&](double u) {
      const double x = std::clamp(std::atanh(std::clamp(u, -1.0, 1.0)), -HexagonSymbol::param_max,
                                  HexagonSymbol::param_max);
      const cplx d = g.det(j, x);
      w.max_unimodularity_defect = std::max(w.max_unimodularity_defect, std::abs(std::abs(d) - 1.0));
      return d / std::abs(d);
    };
    w.edge[j - 1] = winding_of(f, std::tanh(a), std::tanh(b));
    w.total += w.edge[j - 1];
    if (vertical_only) continue;
    const double jump = (g.end(j) - g.start(j % 6 + 1)).cwiseAbs().maxCoeff();
    w.max_vertex_jump = std::max(w.max_vertex_jump, jump);
  }
  w.vertical = w.edge[1] + w.edge[2] + w.edge[3];
  w.classification = classify_hexagon(g.inputs());
  return w;
}

struct PatternCheck {
  double max_deviation = 0.0;  ///< largest |det Gamma^j - closed form| over edges 2, 3, 4
  bool matched = false;
};

inline PatternCheck check_hexagon_pattern(const HexagonSymbol& g, const HexagonPattern& p, int points = 401,
                                          double tol = classification_tolerance) {
  PatternCheck c;
  for (int i = 0; i < points; ++i) {
    const double xi = HexagonSymbol::param_max * std::pow(static_cast<double>(i) / (points - 1), 2.0);
    const double s = -HexagonSymbol::param_max + 2.0 * HexagonSymbol::param_max * i / (points - 1);
    c.max_deviation = std::max({c.max_deviation, std::abs(g.det(2, xi) - p.det2(xi)),
                                std::abs(g.det(4, xi) - p.det4(xi)), std::abs(g.det(3, s) - p.det3())});
  }
  c.matched = c.max_deviation < tol;
  return c;
}

}  // namespace qlev
