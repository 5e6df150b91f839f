#include "qlev/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_residual = 2;
constexpr int exit_unclassified = 3;
constexpr int exit_usage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelArgs {
  int n = 0;
  std::string theta = "0";
  std::string v;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "cycle length N >= 2")->required();
    app->add_option("--theta", theta, "flux in radians, or a literal such as pi/2");
    app->add_option("--v", v, "comma-separated boundary potential, N entries")->required();
  }

  qlev::Model build() const {
    try {
      return qlev::Model({n, qlev::parse_theta(theta), qlev::parse_list(v)});
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else qlev::write_atomic(path, content);
}

qlev::json eigen_json(const std::vector<qlev::Eigenvalue>& ev) {
  qlev::json a = qlev::json::array();
  for (const auto& e : ev) a.push_back({{"lambda", e.lambda}, {"multiplicity", e.multiplicity}, {"at_threshold", e.at_threshold}});
  return a;
}

int cmd_spectrum(const qlev::Model& m, bool oracle, const std::string& out) {
  using qlev::json;
  json j;
  j["params"] = {{"n", m.n()}, {"theta", m.params().theta()}, {"v", m.params().v}};
  for (const auto& c : m.channels())
    j["channels"].push_back({{"j", c.j}, {"lambda", c.lambda}, {"band", {c.band_lo, c.band_hi}}});
  for (const auto& l : m.levels())
    j["levels"].push_back({{"k", l.k}, {"lambda_tilde", l.lambda_tilde}, {"channels", l.member_js}});
  for (const auto& t : m.thresholds())
    j["thresholds"].push_back({{"level_k", t.level_k}, {"side", qlev::to_string(t.side)}, {"energy", t.energy},
                               {"degenerate", t.partner.has_value()}});
  const auto info = qlev::detect_intricate(m);
  j["intricate"] = {{"flag", info.is_intricate}, {"alpha", info.alpha ? json(*info.alpha) : json(nullptr)}};
  const auto b = qlev::bound_state_report(m, oracle);
  j["bound_states"] = {{"discrete", eigen_json(b.discrete)}, {"embedded", eigen_json(b.embedded)}, {"total", b.total}};
  if (oracle) j["bound_states"]["oracle_total"] = b.oracle_total;
  emit(out, j.dump(2) + "\n");
  return exit_ok;
}

int cmd_scattering(const qlev::Model& m, int grid, const std::string& csv) {
  const auto rows = qlev::scattering_grid(m, grid);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.unitarity);
  emit(csv, qlev::scattering_csv(rows, m.n()));
  std::fprintf(stderr, "%zu samples, max unitarity defect %.3e\n", rows.size(), worst);
  return exit_ok;
}

int cmd_thresholds(const qlev::Model& m, const std::string& out) {
  using qlev::json;
  std::vector<qlev::ThresholdLimit> limits;
  try {
    limits = qlev::all_threshold_limits(m);
  } catch (const qlev::ExtrapolationDiverged& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return exit_failure;
  }
  bool unclassified = false;
  json a = json::array();
  for (const auto& t : limits) {
    unclassified = unclassified || t.classification == qlev::ThresholdClass::Unclassified;
    std::printf("level %d %-5s E=% .12f  %s  (change %.1e)\n", t.threshold.level_k, qlev::to_string(t.threshold.side),
                t.threshold.energy, qlev::to_string(t.classification), t.extrapolation_change);
    json re = json::array(), im = json::array();
    for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
      json rr = json::array(), ii = json::array();
      for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) {
        rr.push_back(t.matrix(r, c).real());
        ii.push_back(t.matrix(r, c).imag());
      }
      re.push_back(rr);
      im.push_back(ii);
    }
    a.push_back({{"level_k", t.threshold.level_k}, {"side", qlev::to_string(t.threshold.side)},
                 {"energy", t.threshold.energy}, {"class", qlev::to_string(t.classification)},
                 {"matrix_re", re}, {"matrix_im", im}});
  }
  if (!out.empty()) qlev::write_atomic(out, json{{"thresholds", a}}.dump(2) + "\n");
  return unclassified ? exit_unclassified : exit_ok;
}

int exit_for(const qlev::LevinsonReport& r) {
  switch (r.status) {
    case qlev::ReportStatus::Ok:
    case qlev::ReportStatus::AtThreshold: return exit_ok;
    case qlev::ReportStatus::Residual:
    case qlev::ReportStatus::OracleMismatch: return exit_residual;
    case qlev::ReportStatus::Unclassified: return exit_unclassified;
    case qlev::ReportStatus::Failed: return exit_failure;
  }
  return exit_failure;
}

int cmd_check(const qlev::Model& m, bool oracle, const std::string& out) {
  qlev::LevinsonOptions opt;
  opt.with_oracle = oracle;
  const auto r = qlev::levinson_report(m, opt);
  std::printf("var_det_s   % .9f\nN           %d\nC           %d\nintricate   %s\nlhs         % .9f\n"
              "bound       %d (oracle %d)\nresidual    % .3e\nstatus      %s\n",
              r.var.total, m.n(), r.correction_c, r.intricate.is_intricate ? "yes" : "no", r.lhs, r.bound.total,
              r.bound.oracle_total, r.residual, qlev::to_string(r.status));
  if (!r.message.empty()) std::printf("message     %s\n", r.message.c_str());
  if (!out.empty()) qlev::write_report(out, r);
  return exit_for(r);
}

int cmd_hexagon(const qlev::Model& m, int points, const std::string& csv) {
  if (!m.theta_is_zero() || m.n() % 2 != 0) throw UsageError("hexagon needs theta = 0 and even N");
  const auto g = qlev::hexagon_symbol(m);
  const auto w = qlev::hexagon_winding(g);
  const auto& c = w.classification;
  std::printf("intricate   %s (alpha %d)\ncase        %s\n", c.intricate ? "yes" : "no", g.inputs().alpha,
              qlev::to_string(c.which));
  for (int j = 0; j < 6; ++j) std::printf("edge %d      % .9f\n", j + 1, w.edge[j]);
  std::printf("vertical    % .9f\ntotal       % .9f\nvertex jump %.3e\n", w.vertical, w.total, w.max_vertex_jump);
  if (c.pattern) {
    const auto p = qlev::check_hexagon_pattern(g, *c.pattern);
    std::printf("pattern     %s (max deviation %.3e)\n", p.matched ? "matched" : "mismatch", p.max_deviation);
  }
  if (!csv.empty()) emit(csv, qlev::hexagon_csv(g, points));
  return c.which == qlev::HexagonCase::Unclassified ? exit_unclassified : exit_ok;
}

int cmd_sweep(const std::string& ns, int grid, int trials, std::uint64_t seed, const std::string& dist,
              const std::string& out, bool oracle) {
  qlev::SweepConfig c;
  try {
    c.n_values.clear();
    for (double x : qlev::parse_list(ns)) {
      if (x != std::floor(x) || x < 2) throw std::invalid_argument("N values must be integers >= 2");
      c.n_values.push_back(static_cast<int>(x));
    }
    c.distribution = qlev::parse_distribution(dist);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.theta_grid = grid;
  c.trials_per_cell = trials;
  c.rng_seed = seed;
  c.out_dir = out;
  c.levinson.with_oracle = oracle;
  const auto rows = qlev::run_sweep(c);
  int worst = exit_ok;
  std::size_t ok = 0;
  for (const auto& r : rows) {
    const int e = exit_for(r.report);
    ok += r.report.status == qlev::ReportStatus::Ok;
    if (e == exit_residual || (e == exit_unclassified && worst != exit_residual) || (e == exit_failure && worst == exit_ok))
      worst = e;
  }
  std::printf("%zu trials, %zu ok, manifest %s\n", rows.size(), ok, (c.out_dir / "manifest.csv").string().c_str());
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scattering, bound states and Levinson's theorem for the discrete magnetic quasi-1D model"};
  app.require_subcommand(1);

  ModelArgs ma;
  std::string out, csv;
  bool oracle = true;
  int grid = 512;

  auto* spectrum = app.add_subcommand("spectrum", "channels, levels, thresholds and bound states");
  ma.attach(spectrum);
  spectrum->add_option("--out", out, "JSON output path (default stdout)");
  spectrum->add_flag("!--no-oracle", oracle, "skip the truncated-lattice oracle");

  ModelArgs ms;
  auto* scattering = app.add_subcommand("scattering", "S matrix on a grid of each inter-threshold interval");
  ms.attach(scattering);
  scattering->add_option("--grid", grid, "points per interval")->check(CLI::PositiveNumber);
  scattering->add_option("--csv", csv, "CSV output path (default stdout)");

  ModelArgs mt;
  auto* thresholds = app.add_subcommand("thresholds", "threshold limits and their classification");
  mt.attach(thresholds);
  thresholds->add_option("--out", out, "JSON output path");

  ModelArgs mc;
  auto* check = app.add_subcommand("check-levinson", "evaluate the Levinson identity");
  mc.attach(check);
  check->add_option("--out", out, "report JSON path");
  check->add_flag("!--no-oracle", oracle, "skip the truncated-lattice oracle");

  ModelArgs mh;
  int hex_points = 801;
  auto* hexagon = app.add_subcommand("hexagon", "hexagon symbol of the degenerate threshold (theta = 0, N even)");
  mh.attach(hexagon);
  hexagon->add_option("--csv", csv, "det Gamma trace CSV path");
  hexagon->add_option("--grid", hex_points, "points per edge")->check(CLI::Range(2, 1000000));

  std::string ns = "2,3,4", dist = "unit", sweep_out = "sweep";
  int theta_grid = 16, trials = 1;
  std::uint64_t seed = 42;
  auto* sweep = app.add_subcommand("sweep", "run the identity over a grid of random models");
  sweep->add_option("--n", ns, "comma-separated N values");
  sweep->add_option("--theta-grid,--grid", theta_grid, "uniform theta grid size")->check(CLI::PositiveNumber);
  sweep->add_option("--trials", trials, "trials per (N, theta) cell")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", seed, "RNG seed");
  sweep->add_option("--dist", dist, "unit, deep:<scale> or sparse:<p_zero>");
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_flag("!--no-oracle", oracle, "skip the truncated-lattice oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*spectrum) return cmd_spectrum(ma.build(), oracle, out);
    if (*scattering) return cmd_scattering(ms.build(), grid, csv);
    if (*thresholds) return cmd_thresholds(mt.build(), out);
    if (*check) return cmd_check(mc.build(), oracle, out);
    if (*hexagon) return cmd_hexagon(mh.build(), hex_points, csv);
    if (*sweep) return cmd_sweep(ns, theta_grid, trials, seed, dist, sweep_out, oracle);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_failure;
  }
  return exit_usage;
}
