#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlev {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double level_tolerance = 1e-10;

struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/** \brief Cycle length, flux (stored as a multiple of pi) and boundary potential. */
struct ModelParams {
  int n = 2;
  double theta_over_pi = 0.0;
  std::vector<double> v;

  double theta() const { return theta_over_pi * pi; }
};

struct Channel {
  int j = 0;
  double lambda = 0.0;
  CVector xi;
  double band_lo = 0.0, band_hi = 0.0;
};

struct Level {
  int k = 0;
  double lambda_tilde = 0.0;
  std::vector<int> member_js;
  int multiplicity() const { return static_cast<int>(member_js.size()); }
};

enum class Side { Lower, Upper };

inline const char* to_string(Side s) { return s == Side::Lower ? "lower" : "upper"; }

struct ThresholdPoint {
  int level_k = 0;
  Side side = Side::Lower;
  double energy = 0.0;
  std::optional<int> partner;  ///< index into Model::thresholds() of a coinciding threshold
};

struct IntricateInfo {
  bool is_intricate = false;
  std::optional<int> alpha;
};

class Model {
public:
  explicit Model(ModelParams p) : p_(std::move(p)) {
    if (p_.n < 2) throw ModelError("N must be at least 2");
    if (!(p_.theta_over_pi >= 0.0 && p_.theta_over_pi < 2.0)) throw ModelError("theta must lie in [0, 2pi)");
    if (static_cast<int>(p_.v.size()) != p_.n) throw ModelError("v must have exactly N entries");
    if (std::all_of(p_.v.begin(), p_.v.end(), [](double x) { return x == 0.0; }))
      throw ModelError("v must not be the zero vector");
    for (double x : p_.v)
      if (!std::isfinite(x)) throw ModelError("v entries must be finite");
    build();
  }

  const ModelParams& params() const { return p_; }
  int n() const { return p_.n; }
  double theta() const { return p_.theta(); }
  bool theta_is_zero() const { return p_.theta_over_pi == 0.0; }
  bool theta_is_pi() const { return p_.theta_over_pi == 1.0; }

  const std::vector<Channel>& channels() const { return channels_; }
  const Channel& channel(int j) const { return channels_.at(j - 1); }
  const std::vector<Level>& levels() const { return levels_; }
  const std::vector<ThresholdPoint>& thresholds() const { return thresholds_; }

  double spectrum_min() const { return levels_.front().lambda_tilde - 2.0; }
  double spectrum_max() const { return levels_.back().lambda_tilde + 2.0; }

  /// Rank-one projection (1/N)|xi_j><xi_j|.
  CMatrix projector(int j) const {
    const CVector& x = channel(j).xi;
    return x * x.adjoint() / static_cast<double>(p_.n);
  }

  /// Orthonormal basis vector xi_j / sqrt(N).
  CVector unit_vector(int j) const { return channel(j).xi / std::sqrt(static_cast<double>(p_.n)); }

  CMatrix cycle_matrix() const {
    const int n = p_.n;
    CMatrix a = CMatrix::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
      a(k, k + 1) += 1.0;
      a(k + 1, k) += 1.0;
    }
    a(0, n - 1) += std::polar(1.0, -theta());
    a(n - 1, 0) += std::polar(1.0, theta());
    return a;
  }

  /// Channels j with |lambda - lambda_j| < 2, ascending.
  std::vector<int> open_channels(double lambda) const {
    std::vector<int> out;
    for (const auto& c : channels_)
      if (std::abs(lambda - c.lambda) < 2.0) out.push_back(c.j);
    return out;
  }

  int fiber_dimension(double lambda) const { return static_cast<int>(open_channels(lambda).size()); }

  bool is_threshold(double lambda, double tol = 0.0) const {
    for (const auto& t : thresholds_)
      if (std::abs(lambda - t.energy) <= tol) return true;
    return false;
  }

  /// Sorted distinct threshold energies inside the spectrum.
  std::vector<double> threshold_energies() const {
    std::vector<double> e;
    for (const auto& t : thresholds_) e.push_back(t.energy);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end(), [](double a, double b) { return std::abs(a - b) < level_tolerance; }),
            e.end());
    return e;
  }

  Eigen::VectorXd sqrt_abs_v() const {
    Eigen::VectorXd w(p_.n);
    for (int k = 0; k < p_.n; ++k) w(k) = std::sqrt(std::abs(p_.v[k]));
    return w;
  }

  Eigen::VectorXd sign_v() const {
    Eigen::VectorXd u(p_.n);
    for (int k = 0; k < p_.n; ++k) u(k) = p_.v[k] >= 0.0 ? 1.0 : -1.0;
    return u;
  }

private:
  void build() {
    const int n = p_.n;
    channels_.clear();
    for (int j = 1; j <= n; ++j) {
      Channel c;
      c.j = j;
      const double angle = pi * (p_.theta_over_pi + 2.0 * j) / n;
      c.lambda = 2.0 * std::cos(angle);
      c.xi.resize(n);
      for (int k = 1; k <= n; ++k) c.xi(k - 1) = std::polar(1.0, angle * k);
      c.band_lo = c.lambda - 2.0;
      c.band_hi = c.lambda + 2.0;
      channels_.push_back(std::move(c));
    }

    std::vector<int> order(n);
    for (int j = 0; j < n; ++j) order[j] = j + 1;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return channels_[a - 1].lambda < channels_[b - 1].lambda; });
    levels_.clear();
    for (int j : order) {
      const double lam = channels_[j - 1].lambda;
      if (!levels_.empty() && std::abs(levels_.back().lambda_tilde - lam) < level_tolerance) {
        levels_.back().member_js.push_back(j);
      } else {
        Level l;
        l.k = static_cast<int>(levels_.size()) + 1;
        l.lambda_tilde = lam;
        l.member_js.push_back(j);
        levels_.push_back(std::move(l));
      }
    }
    for (auto& l : levels_) {
      std::sort(l.member_js.begin(), l.member_js.end());
      // exact symmetric value for degenerate pairs
      double s = 0.0;
      for (int j : l.member_js) s += channels_[j - 1].lambda;
      l.lambda_tilde = s / l.multiplicity();
    }

    thresholds_.clear();
    for (const auto& l : levels_) {
      thresholds_.push_back({l.k, Side::Lower, l.lambda_tilde - 2.0, std::nullopt});
      thresholds_.push_back({l.k, Side::Upper, l.lambda_tilde + 2.0, std::nullopt});
    }
    for (std::size_t a = 0; a < thresholds_.size(); ++a)
      for (std::size_t b = 0; b < thresholds_.size(); ++b)
        if (a != b && std::abs(thresholds_[a].energy - thresholds_[b].energy) < level_tolerance)
          thresholds_[a].partner = static_cast<int>(b);
  }

  ModelParams p_;
  std::vector<Channel> channels_;
  std::vector<Level> levels_;
  std::vector<ThresholdPoint> thresholds_;
};

inline Model build_model(ModelParams p) { return Model(std::move(p)); }

/// Expected number of distinct levels for the given (N, theta).
inline int expected_level_count(int n, double theta_over_pi) {
  const bool zero = theta_over_pi == 0.0, half = theta_over_pi == 1.0;
  if (!zero && !half) return n;
  if (n % 2 == 1) return (n + 1) / 2;
  return zero ? n / 2 + 1 : n / 2;
}

inline IntricateInfo detect_intricate(const Model& m) {
  IntricateInfo info;
  const int n = m.n();
  if (!m.theta_is_zero() || n % 2 != 0) return info;
  const Eigen::VectorXd w = m.sqrt_abs_v();
  const CVector a = w.cast<cplx>().cwiseProduct(m.channel(n / 2).xi);
  const CVector b = w.cast<cplx>().cwiseProduct(m.channel(n).xi);
  const double na = a.norm(), nb = b.norm();
  const cplx ab = a.dot(b);
  const double gram = na * na * nb * nb - std::norm(ab);
  if (std::abs(gram) < 1e-12 * na * nb) {
    info.is_intricate = true;
    const cplx ratio = ab / (nb * nb);
    info.alpha = ratio.real() >= 0.0 ? 1 : -1;
  }
  return info;
}

}  // namespace qlev
