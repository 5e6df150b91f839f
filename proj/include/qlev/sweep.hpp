#pragma once

#include "qlev/report_io.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

namespace qlev {

struct VDistribution {
  enum class Kind { UnitSphere, Deep, SparseWithZeros } kind = Kind::UnitSphere;
  double parameter = 0.0;  ///< scale for Deep, zero probability for SparseWithZeros
};

/// "unit", "deep:<scale>" or "sparse:<p_zero>".
inline VDistribution parse_distribution(const std::string& s) {
  if (s == "unit") return {};
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  if (colon == std::string::npos) throw std::invalid_argument("distribution needs a parameter: " + s);
  const double x = std::stod(s.substr(colon + 1));
  if (head == "deep" && x > 0.0) return {VDistribution::Kind::Deep, x};
  if (head == "sparse" && x >= 0.0 && x < 1.0) return {VDistribution::Kind::SparseWithZeros, x};
  throw std::invalid_argument("unknown distribution: " + s);
}

inline std::string to_string(const VDistribution& d) {
  switch (d.kind) {
    case VDistribution::Kind::UnitSphere: return "unit";
    case VDistribution::Kind::Deep: return "deep:" + format_double(d.parameter);
    case VDistribution::Kind::SparseWithZeros: return "sparse:" + format_double(d.parameter);
  }
  return "unit";
}

struct SweepConfig {
  std::vector<int> n_values{2, 3, 4};
  int theta_grid = 16;
  int trials_per_cell = 1;
  std::uint64_t rng_seed = 42;
  VDistribution distribution;
  std::filesystem::path out_dir = "sweep";
  LevinsonOptions levinson;
};

/// theta / pi for the uniform grid 2k/G, with 0 and 1 added when the grid misses them.
inline std::vector<double> theta_points(int grid) {
  if (grid < 1) throw std::invalid_argument("theta grid must be positive");
  std::vector<double> t;
  for (int k = 0; k < grid; ++k) t.push_back(2.0 * k / grid);
  if (grid % 2 == 1) t.push_back(1.0);
  std::sort(t.begin(), t.end());
  return t;
}

/// Deterministic per-trial potential; depends only on (seed, n, theta index, trial).
inline std::vector<double> sample_v(std::uint64_t seed, int n, int theta_idx, int trial, const VDistribution& d) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(theta_idx),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(d.kind)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<double> v(n);
  for (;;) {
    double norm2 = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      if (d.kind == VDistribution::Kind::SparseWithZeros && unif(rng) < d.parameter) x = 0.0;
      norm2 += x * x;
    }
    if (norm2 > 0.0) {
      const double scale = (d.kind == VDistribution::Kind::Deep ? d.parameter : 1.0) / std::sqrt(norm2);
      for (auto& x : v) x *= scale;
      return v;
    }
  }
}

struct TrialSpec {
  std::string id;
  int n = 0;
  int theta_idx = 0;
  int trial = 0;
  ModelParams params;
};

inline std::vector<TrialSpec> sweep_trials(const SweepConfig& c) {
  const auto thetas = theta_points(c.theta_grid);
  std::vector<TrialSpec> out;
  for (int n : c.n_values)
    for (int t = 0; t < static_cast<int>(thetas.size()); ++t)
      for (int r = 0; r < c.trials_per_cell; ++r) {
        TrialSpec s;
        std::ostringstream id;
        id << "n" << n << "_t" << std::setw(3) << std::setfill('0') << t << "_r" << std::setw(3) << r;
        s.id = id.str();
        s.n = n;
        s.theta_idx = t;
        s.trial = r;
        s.params = {n, thetas[t], sample_v(c.rng_seed, n, t, r, c.distribution)};
        out.push_back(std::move(s));
      }
  return out;
}

struct ManifestRow {
  std::string trial_id;
  LevinsonReport report;
};

inline std::string manifest_csv(const std::vector<ManifestRow>& rows) {
  std::ostringstream o;
  o << "trial_id,n,theta,intricate,C,var_det_s,bound_total,residual,status\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    o << row.trial_id << "," << r.params.n << "," << format_double(r.params.theta()) << ","
      << (r.intricate.is_intricate ? 1 : 0) << "," << r.correction_c << "," << format_double(r.var.total) << ","
      << r.bound.total << "," << format_double(r.residual) << "," << to_string(r.status) << "\n";
  }
  return o.str();
}

inline unsigned sweep_threads() {
  if (const char* e = std::getenv("QLEV_THREADS")) {
    const int k = std::atoi(e);
    if (k > 0) return static_cast<unsigned>(k);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline LevinsonReport run_trial(const TrialSpec& s, const LevinsonOptions& opt) {
  try {
    return levinson_report(Model(s.params), opt);
  } catch (const std::exception& e) {
    LevinsonReport r;
    r.params = s.params;
    r.status = ReportStatus::Failed;
    r.message = e.what();
    return r;
  }
}

/// Runs every trial not already on disk, one JSON per trial under out_dir/trials, then writes manifest.csv.
inline std::vector<ManifestRow> run_sweep(const SweepConfig& c, unsigned threads = sweep_threads()) {
  const auto trials = sweep_trials(c);
  const auto dir = c.out_dir / "trials";
  std::filesystem::create_directories(dir);
  std::vector<ManifestRow> rows(trials.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < trials.size();) {
      const auto& s = trials[i];
      const auto path = dir / (s.id + ".json");
      rows[i].trial_id = s.id;
      try {
        if (std::filesystem::exists(path)) {
          rows[i].report = read_report(path);
          continue;
        }
      } catch (const SchemaError&) {
      }
      rows[i].report = run_trial(s, c.levinson);
      try {
        write_report(path, rows[i].report);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(threads, trials.size()); ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (!first_error.empty()) throw std::runtime_error(first_error);
  write_atomic(c.out_dir / "manifest.csv", manifest_csv(rows));
  return rows;
}

}  // namespace qlev
