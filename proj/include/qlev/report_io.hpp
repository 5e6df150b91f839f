#pragma once

#include "qlev/levinson.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qlev {

using json = nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* schema_version = "1";

/// Parses "0", "pi", "pi/2", "3pi/4", "3*pi/4", "2/3*pi" or a plain number of radians into a multiple of pi.
inline double parse_theta(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s.empty()) throw std::invalid_argument("empty theta");
  auto number = [&](const std::string& t) {
    std::size_t used = 0;
    const double x = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("bad number in theta: " + text);
    return x;
  };
  double out = 0.0;
  const auto p = s.find("pi");
  if (p == std::string::npos) {
    out = number(s) / pi;
  } else {
    std::string pre = s.substr(0, p), post = s.substr(p + 2);
    if (!pre.empty() && pre.back() == '*') pre.pop_back();
    double num = 1.0;
    if (!pre.empty()) {
      const auto slash = pre.find('/');
      num = slash == std::string::npos ? number(pre) : number(pre.substr(0, slash)) / number(pre.substr(slash + 1));
    }
    double den = 1.0;
    if (!post.empty()) {
      if (post[0] != '/') throw std::invalid_argument("bad theta literal: " + text);
      den = number(post.substr(1));
    }
    out = num / den;
  }
  if (!(out >= 0.0 && out < 2.0)) throw std::invalid_argument("theta must lie in [0, 2pi): " + text);
  return out;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw std::invalid_argument("bad list entry: " + item);
  }
  return out;
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace detail {

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw SchemaError("expected a number");
  return j.get<double>();
}

inline json matrix_part(const CMatrix& m, bool imag) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(imag ? m(i, k).imag() : m(i, k).real());
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix matrix_from(const json& re, const json& im) {
  if (!re.is_array() || !im.is_array() || re.size() != im.size()) throw SchemaError("matrix shape");
  const auto d = static_cast<Eigen::Index>(re.size());
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (re[i].size() != re.size() || im[i].size() != re.size()) throw SchemaError("matrix must be square");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = cplx(number_from(re[i][k]), number_from(im[i][k]));
  }
  return m;
}

inline json eigen_list(const std::vector<Eigenvalue>& ev) {
  json a = json::array();
  for (const auto& e : ev) a.push_back({{"lambda", e.lambda}, {"multiplicity", e.multiplicity}, {"at_threshold", e.at_threshold}});
  return a;
}

inline std::vector<Eigenvalue> eigen_list_from(const json& a) {
  if (!a.is_array()) throw SchemaError("eigenvalue list");
  std::vector<Eigenvalue> out;
  for (const auto& e : a)
    out.push_back({e.at("lambda").get<double>(), e.at("multiplicity").get<int>(), e.value("at_threshold", false)});
  return out;
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
  return j.at(key);
}

}  // namespace detail

inline json to_json(const LevinsonReport& r) {
  using detail::number_or_null;
  json j;
  j["schema_version"] = schema_version;
  j["params"] = {{"n", r.params.n},
                 {"theta", r.params.theta()},
                 {"theta_over_pi", r.params.theta_over_pi},
                 {"v", r.params.v}};
  j["intricate"] = {{"flag", r.intricate.is_intricate},
                    {"alpha", r.intricate.alpha ? json(*r.intricate.alpha) : json(nullptr)}};
  json th = json::array();
  for (const auto& t : r.thresholds) {
    json e = {{"level_k", t.threshold.level_k},
              {"side", to_string(t.threshold.side)},
              {"energy", t.threshold.energy},
              {"class", to_string(t.classification)},
              {"matrix_re", detail::matrix_part(t.matrix, false)},
              {"matrix_im", detail::matrix_part(t.matrix, true)},
              {"extrapolation_change", t.extrapolation_change}};
    if (t.classification == ThresholdClass::Reflection) {
      e["a"] = t.a;
      e["b"] = {t.b.real(), t.b.imag()};
    }
    th.push_back(e);
  }
  j["thresholds"] = th;
  j["var_det_s"] = r.var.total;
  json iv = json::array();
  for (const auto& t : r.var.traces) {
    json samples = json::array();
    for (const auto& p : t.samples) samples.push_back({p.lambda, p.arg});
    iv.push_back({{"lo", t.lo},
                  {"hi", t.hi},
                  {"dim", t.dim},
                  {"variation", t.variation},
                  {"edge_correction", t.edge_correction},
                  {"samples", samples},
                  {"skipped", t.skipped}});
  }
  j["intervals"] = iv;
  j["max_unitarity_defect"] = r.var.max_unitarity_defect;
  j["correction_C"] = r.correction_c;
  j["bound_states"] = {{"discrete", detail::eigen_list(r.bound.discrete)},
                       {"embedded", detail::eigen_list(r.bound.embedded)},
                       {"total", r.bound.total},
                       {"oracle_total", r.bound.oracle_total},
                       {"oracle_layers", r.bound.oracle_layers},
                       {"tail_tolerance", r.bound.tail_tolerance}};
  j["lhs"] = number_or_null(r.lhs);
  j["residual"] = number_or_null(r.residual);
  j["comb_total"] = r.comb_total ? json(*r.comb_total) : json(nullptr);
  j["channel_lhs"] = r.channel_lhs ? json(*r.channel_lhs) : json(nullptr);
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  return j;
}

inline LevinsonReport report_from_json(const json& j) {
  using detail::field;
  using detail::number_from;
  try {
    if (field(j, "schema_version") != schema_version) throw SchemaError("unsupported schema_version");
    LevinsonReport r;
    const auto& p = field(j, "params");
    r.params.n = field(p, "n").get<int>();
    r.params.theta_over_pi = p.contains("theta_over_pi") ? p.at("theta_over_pi").get<double>()
                                                          : field(p, "theta").get<double>() / pi;
    r.params.v = field(p, "v").get<std::vector<double>>();
    if (static_cast<int>(r.params.v.size()) != r.params.n) throw SchemaError("v length differs from n");
    const auto& in = field(j, "intricate");
    r.intricate.is_intricate = field(in, "flag").get<bool>();
    if (in.contains("alpha") && !in.at("alpha").is_null()) r.intricate.alpha = in.at("alpha").get<int>();
    for (const auto& t : field(j, "thresholds")) {
      ThresholdLimit l;
      l.threshold.level_k = field(t, "level_k").get<int>();
      const auto side = field(t, "side").get<std::string>();
      if (side != "lower" && side != "upper") throw SchemaError("bad side");
      l.threshold.side = side == "lower" ? Side::Lower : Side::Upper;
      l.threshold.energy = field(t, "energy").get<double>();
      const auto cls = threshold_class_from_string(field(t, "class").get<std::string>());
      if (!cls) throw SchemaError("bad threshold class");
      l.classification = *cls;
      l.matrix = detail::matrix_from(field(t, "matrix_re"), field(t, "matrix_im"));
      l.extrapolation_change = t.value("extrapolation_change", 0.0);
      if (t.contains("a")) l.a = t.at("a").get<double>();
      if (t.contains("b")) l.b = cplx(t.at("b")[0].get<double>(), t.at("b")[1].get<double>());
      r.thresholds.push_back(std::move(l));
    }
    r.var.total = number_from(field(j, "var_det_s"));
    if (j.contains("intervals"))
      for (const auto& t : j.at("intervals")) {
        PhaseTrace tr;
        tr.lo = field(t, "lo").get<double>();
        tr.hi = field(t, "hi").get<double>();
        tr.dim = t.value("dim", 0);
        tr.variation = field(t, "variation").get<double>();
        tr.edge_correction = t.value("edge_correction", 0.0);
        if (t.contains("samples"))
          for (const auto& p : t.at("samples")) tr.samples.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        if (t.contains("skipped")) tr.skipped = t.at("skipped").get<std::vector<double>>();
        r.var.traces.push_back(std::move(tr));
      }
    r.var.max_unitarity_defect = j.value("max_unitarity_defect", 0.0);
    r.correction_c = field(j, "correction_C").get<int>();
    const auto& b = field(j, "bound_states");
    r.bound.discrete = detail::eigen_list_from(field(b, "discrete"));
    r.bound.embedded = detail::eigen_list_from(field(b, "embedded"));
    r.bound.total = field(b, "total").get<int>();
    r.bound.oracle_total = field(b, "oracle_total").get<int>();
    r.bound.oracle_layers = b.value("oracle_layers", 0);
    r.bound.tail_tolerance = b.value("tail_tolerance", 1e-6);
    r.bound.agreement = r.bound.oracle_total == r.bound.total;
    for (const auto& e : r.bound.discrete) r.bound.at_threshold = r.bound.at_threshold || e.at_threshold;
    for (const auto& e : r.bound.embedded) r.bound.at_threshold = r.bound.at_threshold || e.at_threshold;
    r.lhs = number_from(field(j, "lhs"));
    r.residual = number_from(field(j, "residual"));
    if (j.contains("comb_total") && !j.at("comb_total").is_null()) r.comb_total = j.at("comb_total").get<double>();
    if (j.contains("channel_lhs") && !j.at("channel_lhs").is_null()) r.channel_lhs = j.at("channel_lhs").get<double>();
    const auto st = report_status_from_string(j.value("status", std::string("failed")));
    if (!st) throw SchemaError("bad status");
    r.status = *st;
    r.message = j.value("message", std::string());
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
}

inline void write_report(const std::filesystem::path& path, const LevinsonReport& r) {
  write_atomic(path, to_json(r).dump(2) + "\n");
}

inline LevinsonReport read_report(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(e.what());
  }
  return report_from_json(j);
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  return json(x).dump();
}

struct ScatteringRow {
  double lambda = 0.0;
  CMatrix matrix;
  double arg_det_unwrapped = 0.0;
  double unitarity = 0.0;
};

/// S on `points` energies per inter-threshold interval, smoothstep-spaced toward the thresholds. The argument of
/// det S is unwrapped within each interval.
inline std::vector<ScatteringRow> scattering_grid(const Model& m, int points) {
  std::vector<ScatteringRow> rows;
  for (const auto& [lo, hi] : spectral_intervals(m)) {
    double prev = 0.0;
    bool first = true;
    for (int i = 1; i <= points; ++i) {
      const double u = static_cast<double>(i) / (points + 1);
      const double lam = lo + (hi - lo) * u * u * (3.0 - 2.0 * u);
      if (m.is_threshold(lam, 1e-12)) continue;
      ScatteringSample s;
      try {
        s = s_matrix(m, lam);
      } catch (const NonInvertible&) {
        continue;
      }
      const double a = std::arg(s.matrix.determinant());
      double unwrapped = a;
      if (!first) unwrapped = prev + std::remainder(a - prev, 2.0 * pi);
      first = false;
      prev = unwrapped;
      rows.push_back({lam, s.matrix, unwrapped, s.unitarity_defect()});
    }
  }
  return rows;
}

/// Header lambda,dim, re/im of S_ab row-major for a, b <= n_max, arg_det_unwrapped, unitarity. Entries beyond
/// the open dimension of a row are left empty so every row has the same column count.
inline std::string scattering_csv(const std::vector<ScatteringRow>& rows, int n_max) {
  std::ostringstream o;
  o << "lambda,dim";
  for (int a = 1; a <= n_max; ++a)
    for (int b = 1; b <= n_max; ++b) o << ",re_s" << a << "_" << b << ",im_s" << a << "_" << b;
  o << ",arg_det_unwrapped,unitarity\n";
  for (const auto& r : rows) {
    const auto d = r.matrix.rows();
    o << format_double(r.lambda) << "," << d;
    for (int a = 0; a < n_max; ++a)
      for (int b = 0; b < n_max; ++b) {
        if (a < d && b < d) o << "," << format_double(r.matrix(a, b).real()) << "," << format_double(r.matrix(a, b).imag());
        else o << ",,";
      }
    o << "," << format_double(r.arg_det_unwrapped) << "," << format_double(r.unitarity) << "\n";
  }
  return o.str();
}

/// det Gamma along the six edges; arc runs from 0 to 6, one unit per edge.
inline std::string hexagon_csv(const HexagonSymbol& g, int points_per_edge) {
  std::ostringstream o;
  o << "edge,arc,param,re_det,im_det\n";
  for (int j = 1; j <= 6; ++j) {
    const auto [a, b] = HexagonSymbol::traversal(j);
    const double ta = std::tanh(a), tb = std::tanh(b);
    for (int i = 0; i < points_per_edge; ++i) {
      const double f = static_cast<double>(i) / (points_per_edge - 1);
      const double x = std::clamp(std::atanh(std::clamp(ta + (tb - ta) * f, -1.0, 1.0)), -HexagonSymbol::param_max,
                                  HexagonSymbol::param_max);
      const cplx d = g.det(j, x);
      o << j << "," << format_double(j - 1 + f) << "," << format_double(x) << "," << format_double(d.real()) << ","
        << format_double(d.imag()) << "\n";
    }
  }
  return o.str();
}

}  // namespace qlev
