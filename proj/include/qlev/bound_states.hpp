#pragma once

#include "qlev/resolvent.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include <random>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

namespace qlev {

struct Eigenvalue {
  double lambda = 0.0;
  int multiplicity = 1;
  bool at_threshold = false;  ///< within 1e-8 of a threshold
};

inline int total_multiplicity(const std::vector<Eigenvalue>& ev) {
  int t = 0;
  for (const auto& e : ev) t += e.multiplicity;
  return t;
}

namespace detail {

inline std::vector<int> support(const Model& m) {
  std::vector<int> s;
  for (int k = 0; k < m.n(); ++k)
    if (m.params().v[k] != 0.0) s.push_back(k);
  return s;
}

/// diag(1/v_S) + G_SS(lambda) for real lambda outside the spectrum; increasing in lambda.
inline CMatrix reduced_bs(const Model& m, const std::vector<int>& s, double lambda) {
  const CMatrix g = boundary_green(m, EnergyArg::plus(lambda));
  const auto d = static_cast<Eigen::Index>(s.size());
  CMatrix f(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) f(a, b) = g(s[a], s[b]);
  for (Eigen::Index a = 0; a < d; ++a) f(a, a) += 1.0 / m.params().v[s[a]];
  return f;
}

inline int negative_inertia(const CMatrix& f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(f, Eigen::EigenvaluesOnly);
  int c = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) c += es.eigenvalues()(i) < 0.0;
  return c;
}

}  // namespace detail

inline constexpr double threshold_flag_distance = 1e-8;

/// Eigenvalues of H below and above the continuous spectrum, with multiplicity.
inline std::vector<Eigenvalue> find_discrete(const Model& m, double edge_gap = 1e-13, double resolution = 1e-11) {
  const auto s = detail::support(m);
  int neg_v = 0;
  double vmax = 0.0;
  for (int k : s) {
    neg_v += m.params().v[k] < 0.0;
    vmax = std::max(vmax, std::abs(m.params().v[k]));
  }
  auto nneg = [&](double x) { return detail::negative_inertia(detail::reduced_bs(m, s, x)); };
  const double lo_edge = m.spectrum_min() - edge_gap, hi_edge = m.spectrum_max() + edge_gap;
  const double bound = 4.0 + vmax + 1.0;

  // number of eigenvalues below x (x < spectrum) or above x (x > spectrum)
  auto below = [&](double x) { return neg_v - nneg(x); };
  auto above = [&](double x) { return nneg(x) - neg_v; };
  // cumulative count N(x) = #eigenvalues < x, valid on each side separately
  std::vector<Eigenvalue> out;
  std::function<void(double, double, int, int, const std::function<int(double)>&)> split =
      [&](double a, double b, int ca, int cb, const std::function<int(double)>& cum) {
        if (cb - ca <= 0) return;
        if (b - a < resolution) {
          Eigenvalue e;
          e.lambda = 0.5 * (a + b);
          e.multiplicity = cb - ca;
          e.at_threshold = m.is_threshold(e.lambda, threshold_flag_distance);
          out.push_back(e);
          return;
        }
        const double c = 0.5 * (a + b);
        const int cc = cum(c);
        split(a, c, ca, cc, cum);
        split(c, b, cc, cb, cum);
      };

  const int nb = below(lo_edge);
  if (nb > 0) split(-bound, lo_edge, 0, nb, below);
  const int na = above(hi_edge);
  if (na > 0) {
    auto cum = [&](double x) { return na - above(x); };
    split(hi_edge, bound, 0, na, cum);
  }
  return out;
}

struct EmbeddedOptions {
  double scan_step = 1e-3;
  double singular_tol = 1e-8;
  double decouple_tol = 1e-6;
};

/// Eigenvalues inside the continuous spectrum: kernel vectors of B(lambda+i0) that decouple from all open channels.
inline std::vector<Eigenvalue> find_embedded(const Model& m, const EmbeddedOptions& opt = {}) {
  std::vector<Eigenvalue> out;
  const auto e = m.threshold_energies();
  const Eigen::VectorXd w = m.sqrt_abs_v();
  auto smin = [&](double lam) {
    Eigen::JacobiSVD<CMatrix> svd(bs_matrix(m, EnergyArg::plus(lam)));
    const auto& s = svd.singularValues();
    return s(s.size() - 1) / s(0);
  };
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    const double lo = e[i], hi = e[i + 1];
    const int steps = std::max(8, static_cast<int>(std::ceil((hi - lo) / opt.scan_step)));
    const double h = (hi - lo) / steps;
    std::vector<double> xs, ys;
    for (int k = 1; k < steps; ++k) {
      xs.push_back(lo + k * h);
      ys.push_back(smin(xs.back()));
    }
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
      if (!(ys[k] <= ys[k - 1] && ys[k] <= ys[k + 1])) continue;
      const auto [xm, ym] = boost::math::tools::brent_find_minima(smin, xs[k - 1], xs[k + 1], 60);
      if (!(ym < opt.singular_tol)) continue;
      const CMatrix b = bs_matrix(m, EnergyArg::plus(xm));
      Eigen::JacobiSVD<CMatrix> svd(b, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const auto open = m.open_channels(xm);
      int mult = 0;
      for (Eigen::Index c = sv.size() - 1; c >= 0; --c) {
        if (!(sv(c) < opt.singular_tol * sv(0))) break;
        const CVector x = w.cast<cplx>().cwiseProduct(svd.matrixV().col(c));
        bool decoupled = true;
        for (int j : open)
          if (std::abs(m.unit_vector(j).dot(x)) >= opt.decouple_tol) decoupled = false;
        mult += decoupled;
      }
      if (mult > 0) {
        if (!out.empty() && std::abs(out.back().lambda - xm) < 1e-7) continue;
        out.push_back({xm, mult, m.is_threshold(xm, threshold_flag_distance)});
      }
    }
  }
  return out;
}

struct OracleResult {
  std::vector<double> eigenvalues;  ///< accepted localized eigenvalues, with repetition
  int count = 0;
  int layers = 0;
  double tail_tolerance = 1e-6;
  bool converged = false;
};

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Upper band storage (kd = N) of the Hamiltonian truncated to `layers` layers.
struct BandedHamiltonian {
  int n = 0, layers = 0, kd = 0;
  std::vector<cplx> ab;  ///< column-major, ldab = kd + 1

  int size() const { return n * layers; }
  cplx& at(int i, int j) { return ab[static_cast<std::size_t>(j) * (kd + 1) + kd + i - j]; }
  cplx get(int i, int j) const {
    if (i > j) return std::conj(get(j, i));
    if (j - i > kd) return 0.0;
    return ab[static_cast<std::size_t>(j) * (kd + 1) + kd + i - j];
  }
};

inline BandedHamiltonian truncated_hamiltonian(const Model& m, int layers) {
  BandedHamiltonian h;
  h.n = m.n();
  h.layers = layers;
  h.kd = h.n;
  h.ab.assign(static_cast<std::size_t>(h.size()) * (h.kd + 1), 0.0);
  const CMatrix a = m.cycle_matrix();
  for (int l = 0; l < layers; ++l) {
    const int off = l * h.n;
    for (int i = 0; i < h.n; ++i)
      for (int j = i; j < h.n; ++j)
        if (a(i, j) != 0.0) h.at(off + i, off + j) += a(i, j);
    if (l == 0)
      for (int k = 0; k < h.n; ++k) h.at(k, k) += m.params().v[k];
    if (l + 1 < layers) {
      const double t = l == 0 ? std::sqrt(2.0) : 1.0;
      for (int k = 0; k < h.n; ++k) h.at(off + k, off + h.n + k) += t;
    }
  }
  return h;
}

inline std::vector<double> banded_eigenvalues(const BandedHamiltonian& h) {
  std::vector<cplx> ab = h.ab;
  std::vector<double> w(h.size());
  const lapack_int info = LAPACKE_zhbev(LAPACK_COL_MAJOR, 'N', 'U', h.size(), h.kd, ab.data(), h.kd + 1, w.data(),
                                        nullptr, 1);
  if (info != 0) throw std::runtime_error("zhbev failed");
  return w;
}

/// Orthonormal basis of the invariant subspace near mu by block inverse iteration.
inline CMatrix inverse_iteration(const BandedHamiltonian& h, double mu, int block, std::uint64_t seed) {
  const int n = h.size(), kl = h.kd, ku = h.kd, ldab = 2 * kl + ku + 1;
  std::vector<cplx> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i) {
      cplx val = h.get(i, j);
      if (i == j) val -= mu;
      ab[static_cast<std::size_t>(j) * ldab + kl + ku + i - j] = val;
    }
  std::vector<lapack_int> ipiv(n);
  if (LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku, ab.data(), ldab, ipiv.data()) < 0)
    throw std::runtime_error("zgbtrf failed");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CMatrix x(n, block);
  for (int c = 0; c < block; ++c)
    for (int i = 0; i < n; ++i) x(i, c) = cplx(nd(rng), nd(rng));
  for (int it = 0; it < 4; ++it) {
    if (LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, block, ab.data(), ldab, ipiv.data(), x.data(), n) != 0)
      throw std::runtime_error("zgbtrs failed");
    Eigen::HouseholderQR<CMatrix> qr(x);
    x = qr.householderQ() * CMatrix::Identity(n, block);
  }
  return x;
}

/// Number of eigenvalues of the truncated Hamiltonian below x, from the inertia of a block LDL^* factorisation.
inline int sturm_count(const Model& m, int layers, double x) {
  // eliminate from the last layer inwards: the Schur complements stay diagonal in the eigenbasis of A
  // until the boundary layer, where the potential couples the channels
  const int n = m.n();
  Eigen::SelfAdjointEigenSolver<CMatrix> ea(m.cycle_matrix());
  const Eigen::VectorXd lam = ea.eigenvalues();
  int count = 0;
  Eigen::VectorXd d(n);
  for (int j = 0; j < n; ++j) {
    double dj = lam(j) - x;
    for (int l = layers - 1; l >= 1; --l) {
      if (l < layers - 1) dj = lam(j) - x - 1.0 / dj;
      if (dj == 0.0) dj = -1e-300;
      count += dj < 0.0;
    }
    d(j) = dj;
  }
  CMatrix d0 = m.cycle_matrix();
  d0.diagonal().array() -= x;
  for (int k = 0; k < n; ++k) d0(k, k) += m.params().v[k];
  // channels with a small layer-1 pivot stay in the dense block, the others are eliminated into the boundary
  std::vector<int> kept;
  if (layers > 1)
    for (int j = 0; j < n; ++j) {
      const auto u = ea.eigenvectors().col(j);
      if (std::abs(d(j)) < 1e-2) {
        kept.push_back(j);
        count -= d(j) < 0.0;
      } else {
        d0 -= (2.0 / d(j)) * u * u.adjoint();
      }
    }
  const int k = static_cast<int>(kept.size());
  CMatrix blk = CMatrix::Zero(n + k, n + k);
  blk.topLeftCorner(n, n) = d0;
  for (int i = 0; i < k; ++i) {
    blk.block(0, n + i, n, 1) = std::sqrt(2.0) * ea.eigenvectors().col(kept[i]);
    blk.block(n + i, 0, 1, n) = std::sqrt(2.0) * ea.eigenvectors().col(kept[i]).adjoint();
    blk(n + i, n + i) = d(kept[i]);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> e0(blk, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < n + k; ++i) count += e0.eigenvalues()(i) < 0.0;
  return count;
}

/// Eigenvalues of the truncated Hamiltonian outside [lo, hi], located by bisection on Sturm counts.
inline std::vector<double> outside_eigenvalues(const Model& m, int layers, double lo, double hi, double bound,
                                               double resolution = 1e-12) {
  std::vector<double> out;
  std::function<void(double, double, int, int)> split = [&](double a, double b, int ca, int cb) {
    if (cb - ca <= 0) return;
    if (b - a < resolution) {
      for (int i = 0; i < cb - ca; ++i) out.push_back(0.5 * (a + b));
      return;
    }
    const double c = 0.5 * (a + b);
    const int cc = sturm_count(m, layers, c);
    split(a, c, ca, cc);
    split(c, b, cc, cb);
  };
  split(-bound, lo, sturm_count(m, layers, -bound), sturm_count(m, layers, lo));
  split(hi, bound, sturm_count(m, layers, hi), sturm_count(m, layers, bound));
  return out;
}

/// Eigenvalues with tail mass below tail_tol, clusters handled by block inverse iteration.
inline std::vector<double> localized(const Model& m, const BandedHamiltonian& h, const std::vector<double>& cand,
                                     double tail_tol) {
  std::vector<double> accepted;
  const int layers = h.layers;
  const int tail_start = layers - layers / 5;
  for (std::size_t i = 0; i < cand.size();) {
    std::size_t j = i + 1;
    while (j < cand.size() && cand[j] - cand[j - 1] < 1e-8) ++j;
    const int block = static_cast<int>(j - i);
    const double mu = cand[i] + 1e-13 * (1.0 + std::abs(cand[i]));
    const CMatrix x = inverse_iteration(h, mu, block, 0x9e3779b97f4a7c15ULL + i);
    for (int c = 0; c < block; ++c) {
      const double tail = x.col(c).tail(static_cast<Eigen::Index>(layers - tail_start) * m.n()).squaredNorm();
      if (tail < tail_tol) accepted.push_back(cand[i + c]);
    }
    i = j;
  }
  return accepted;
}

struct OracleStage {
  std::vector<double> accepted;
  std::vector<double> inband;  ///< in-band candidates that passed the tail test
};

/// Full eigenvalue lists at `layers` and `layers + 1`; in-band eigenvalues present in both are candidates.
/// Eigenvalues of the truncation outside the essential spectrum need no localization test: by interlacing,
/// their number is a lower bound for the true count that is nondecreasing in the number of layers.
inline constexpr double edge_margin = 1e-11;

inline OracleStage oracle_full(const Model& m, int layers, double tail_tol) {
  const auto h = truncated_hamiltonian(m, layers);
  const auto ev = banded_eigenvalues(h);
  const auto ev1 = banded_eigenvalues(truncated_hamiltonian(m, layers + 1));
  const double lo = m.spectrum_min() - edge_margin, hi = m.spectrum_max() + edge_margin;
  std::vector<double> cand;
  OracleStage st;
  for (double x : ev) {
    if (x < lo || x > hi) {
      st.accepted.push_back(x);
      continue;
    }
    auto it = std::lower_bound(ev1.begin(), ev1.end(), x - 1e-10);
    if (it != ev1.end() && std::abs(*it - x) <= 1e-10) cand.push_back(x);
  }
  st.inband = localized(m, h, cand, tail_tol);
  st.accepted.insert(st.accepted.end(), st.inband.begin(), st.inband.end());
  std::sort(st.accepted.begin(), st.accepted.end());
  return st;
}

/// Re-check at a larger size: outside eigenvalues by Sturm bisection, in-band ones at the known candidates.
inline std::vector<double> oracle_refined(const Model& m, int layers, const std::vector<double>& inband,
                                          double tail_tol) {
  double vmax = 0.0;
  for (double x : m.params().v) vmax = std::max(vmax, std::abs(x));
  const double lo = m.spectrum_min() - edge_margin, hi = m.spectrum_max() + edge_margin;
  std::vector<double> out = outside_eigenvalues(m, layers, lo, hi, 4.0 + vmax + 1.0);
  std::vector<double> cand;
  for (double x : inband) {
    const int c = sturm_count(m, layers, x + 1e-9) - sturm_count(m, layers, x - 1e-9);
    if (c > 0) cand.push_back(x);
  }
  if (!cand.empty()) {
    const auto kept = localized(m, truncated_hamiltonian(m, layers), cand, tail_tol);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Bound-state count of the truncated lattice after max_doublings doublings of the number of layers,
/// converged when the last doubling leaves the count unchanged.
inline OracleResult lattice_oracle(const Model& m, int layers = 500, double tail_tol = 1e-6, int max_doublings = 6) {
  if (layers < 500) throw std::invalid_argument("lattice oracle needs at least 500 layers");
  OracleResult r;
  r.tail_tolerance = tail_tol;
  const auto first = detail::oracle_full(m, layers, tail_tol);
  auto prev = first.accepted;
  auto cur = prev;
  for (int d = 0; d < max_doublings; ++d) {
    layers *= 2;
    prev = std::move(cur);
    cur = detail::oracle_refined(m, layers, first.inband, tail_tol);
  }
  if (cur.size() != prev.size()) throw NoConvergence("lattice oracle count not stable under layer doubling");
  r.eigenvalues = cur;
  r.count = static_cast<int>(cur.size());
  r.layers = layers;
  r.converged = true;
  return r;
}

struct BoundStateReport {
  std::vector<Eigenvalue> discrete;
  std::vector<Eigenvalue> embedded;
  int total = 0;
  int oracle_total = -1;
  int oracle_layers = 0;
  double tail_tolerance = 1e-6;
  bool agreement = false;
  bool at_threshold = false;
};

inline BoundStateReport bound_state_report(const Model& m, bool with_oracle = true) {
  BoundStateReport r;
  r.discrete = find_discrete(m);
  r.embedded = find_embedded(m);
  r.total = total_multiplicity(r.discrete) + total_multiplicity(r.embedded);
  for (const auto& e : r.discrete) r.at_threshold = r.at_threshold || e.at_threshold;
  for (const auto& e : r.embedded) r.at_threshold = r.at_threshold || e.at_threshold;
  if (with_oracle) {
    const auto o = lattice_oracle(m);
    r.oracle_total = o.count;
    r.oracle_layers = o.layers;
    r.tail_tolerance = o.tail_tolerance;
    r.agreement = r.oracle_total == r.total;
  }
  return r;
}

}  // namespace qlev
