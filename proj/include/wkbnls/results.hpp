#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/version.hpp>

#include "json.hpp"

#include "config.hpp"
#include "errors.hpp"
#include "invariants.hpp"
#include "wkb_scheme.hpp"

namespace wkb {

struct ResultRow {
  std::string experiment_id;
  double epsilon = 0.0;
  std::string norm_family;
  double level_ell = 0.0;
  double delta_schedule_M = 0.0;
  double time_T = 0.0;
  double error_value = 0.0;  // NaN marks a failed sub-run
  std::string fit_group = "none";
};

inline const char* csv_header() {
  return "experiment_id,epsilon,norm_family,level_ell,delta_schedule_M,time_T,error_value,fit_group";
}

inline bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.experiment_id, a.epsilon, a.norm_family) < std::tie(b.experiment_id, b.epsilon, b.norm_family);
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int used = 0;
  std::vector<double> excluded_eps;  // errors at or below the roundoff floor
};

inline constexpr double rate_floor() { return 100.0 * DBL_EPSILON; }

/// Least squares of log(error) on log(eps); points with error <= 100 DBL_EPSILON
/// are dropped and listed. Throws when fewer than three points remain.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  RateFit f;
  std::vector<double> x, y;
  for (const auto& [eps, err] : points) {
    detail::require(eps > 0.0, "fit_rate: eps must be positive");
    if (!std::isfinite(err)) continue;
    if (err <= rate_floor()) {
      f.excluded_eps.push_back(eps);
      continue;
    }
    x.push_back(std::log(eps));
    y.push_back(std::log(err));
  }
  if (x.size() < 3) throw ConfigError("fit_rate: fewer than 3 usable points");
  const auto lf = detail::least_squares(x, y);
  f.slope = lf.slope;
  f.intercept = lf.intercept;
  f.r_squared = lf.r_squared;
  f.used = static_cast<int>(x.size());
  return f;
}

struct FitSummary {
  std::string family;
  std::string group;
  double expected = 0.0;
  double tolerance = 0.0;
  double min_r_squared = 0.98;
  RateFit fit;
  bool fitted = false;
  std::string note;
  bool passed() const {
    return fitted && std::abs(fit.slope - expected) <= tolerance && fit.r_squared >= min_r_squared;
  }
};

/// Expected slope for a fit group name: half, one or two.
inline std::optional<double> expected_slope(const std::string& group) {
  if (group == "half") return 0.5;
  if (group == "one") return 1.0;
  if (group == "two") return 2.0;
  return std::nullopt;
}

inline double slope_tolerance(const std::string& group) { return group == "two" ? 0.2 : 0.15; }

/// Fits every (experiment_id, norm_family) series whose group has an expected
/// slope, over the positive eps values. Families with no usable points are
/// reported with a note; they pass only if every error is exactly zero.
inline std::vector<FitSummary> fit_families(const std::vector<ResultRow>& rows, double wave_tolerance = 0.2) {
  std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> series;
  for (const auto& r : rows)
    if (expected_slope(r.fit_group) && r.epsilon > 0.0) series[{r.experiment_id, r.norm_family}].push_back(&r);
  std::vector<FitSummary> out;
  for (const auto& [key, pts] : series) {
    FitSummary s;
    s.family = key.first + "/" + key.second;
    s.group = pts.front()->fit_group;
    s.expected = *expected_slope(s.group);
    s.tolerance = key.second.rfind("wave", 0) == 0 ? wave_tolerance : slope_tolerance(s.group);
    std::vector<std::pair<double, double>> xy;
    bool all_zero = true;
    for (const auto* r : pts) {
      xy.emplace_back(r->epsilon, r->error_value);
      all_zero = all_zero && r->error_value == 0.0;
    }
    try {
      s.fit = fit_rate(xy);
      s.fitted = true;
    } catch (const ConfigError& e) {
      s.note = all_zero ? "all errors vanish" : e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Outcome of one experiment.
struct RunRecord {
  std::string experiment_id;
  std::string experiment;
  std::string config_hash;
  DerivedConstants constants;
  double K_ell = 0.0;
  double band = 0.0;
  int steps = 0;
  std::vector<ResultRow> rows;
  std::vector<FitSummary> fits;
  std::vector<Check> checks;
  std::vector<std::string> failures;
  nlohmann::json extra = nlohmann::json::object();
  double wall_seconds = 0.0;

  bool passed() const {
    if (!failures.empty()) return false;
    for (const auto& c : checks)
      if (!c.passed) return false;
    for (const auto& f : fits)
      if (!f.passed() && f.note != "all errors vanish") return false;
    return true;
  }
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double parse_double(const std::string& s) {
  if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "Inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("csv: not a number: '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string rows_to_csv(std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), row_less);
  std::string out = csv_header();
  out += "\r\n";
  for (const auto& r : rows) {
    out += detail::csv_field(r.experiment_id) + ',' + detail::format_double(r.epsilon) + ',' +
           detail::csv_field(r.norm_family) + ',' + detail::format_double(r.level_ell) + ',' +
           detail::format_double(r.delta_schedule_M) + ',' + detail::format_double(r.time_T) + ',' +
           detail::format_double(r.error_value) + ',' + detail::csv_field(r.fit_group) + "\r\n";
  }
  return out;
}

inline std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv " + path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw ConfigError("csv " + path + ": unexpected header");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 8) throw ConfigError("csv " + path + ": line " + std::to_string(lineno) + " has " +
                                         std::to_string(f.size()) + " fields");
    try {
      rows.push_back({f[0], detail::parse_double(f[1]), f[2], detail::parse_double(f[3]),
                      detail::parse_double(f[4]), detail::parse_double(f[5]), detail::parse_double(f[6]), f[7]});
    } catch (const std::exception& e) {
      throw ConfigError("csv " + path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

inline nlohmann::json to_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}, {"detail", c.detail}};
}

inline nlohmann::json to_json(const FitSummary& f) {
  nlohmann::json j{{"family", f.family}, {"group", f.group},     {"expected", f.expected},
                   {"tolerance", f.tolerance}, {"passed", f.passed()}, {"note", f.note}};
  if (f.fitted) {
    j["slope"] = f.fit.slope;
    j["intercept"] = f.fit.intercept;
    j["r_squared"] = f.fit.r_squared;
    j["points"] = f.fit.used;
    j["excluded_eps"] = f.fit.excluded_eps;
  }
  return j;
}

inline nlohmann::json versions() {
  nlohmann::json v;
  v["wkbnls"] = "1.0.0";
  v["fftw"] = std::string(fftw_version);
  v["boost"] = BOOST_LIB_VERSION;
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  v["compiler"] = __VERSION__;
  return v;
}

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json checks = nlohmann::json::array(), fits = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  for (const auto& f : r.fits) fits.push_back(to_json(f));
  return {{"experiment_id", r.experiment_id},
          {"experiment", r.experiment},
          {"config_hash", r.config_hash},
          {"constants",
           {{"omega_in", r.constants.omega_in},
            {"M1", r.constants.M1},
            {"M2", r.constants.M2},
            {"M", r.constants.M},
            {"T", r.constants.T},
            {"binding", r.constants.binding},
            {"K_ell", r.K_ell},
            {"band", r.band},
            {"steps", r.steps}}},
          {"checks", checks},
          {"fits", fits},
          {"failures", r.failures},
          {"diagnostics", r.extra},
          {"passed", r.passed()},
          {"wall_seconds", r.wall_seconds}};
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
  out.close();
  if (!out) throw ConfigError("write failed: " + p.string());
}

inline std::string gnuplot_script(const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, std::string>, bool> series;
  for (const auto& r : rows)
    if (r.fit_group != "none" && r.epsilon > 0.0) series[{r.experiment_id, r.norm_family}] = true;
  std::string s =
      "set datafile separator ','\nset logscale xy\nset xlabel 'epsilon'\nset ylabel 'error'\n"
      "set key outside\nset terminal pngcairo size 1200,800\nset output 'rates.png'\n";
  if (series.empty()) return s + "# no rate series in results.csv\n";
  s += "plot \\\n";
  std::size_t i = 0;
  for (const auto& [key, _] : series) {
    s += "  'results.csv' using (strcol(1) eq '" + key.first + "' && strcol(3) eq '" + key.second +
         "' ? $2 : 1/0):7 with linespoints title '" + key.first + ":" + key.second + "'";
    s += ++i < series.size() ? ", \\\n" : "\n";
  }
  return s;
}

}  // namespace detail

/// results.csv, manifest.json and plot.gp under `out_dir`.
inline void emit_outputs(const std::vector<RunRecord>& records, const ExperimentConfig& cfg,
                         const std::string& out_dir, bool plot = true) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir + ": " + ec.message());
  std::vector<ResultRow> rows;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : records) {
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    runs.push_back(to_json(r));
  }
  detail::write_file(fs::path(out_dir) / "results.csv", rows_to_csv(rows));
  const nlohmann::json manifest{{"config", to_json(cfg)},
                                {"seed", cfg.seed},
                                {"versions", versions()},
                                {"runs", runs}};
  detail::write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  if (plot) detail::write_file(fs::path(out_dir) / "plot.gp", detail::gnuplot_script(rows));
}

}  // namespace wkb
