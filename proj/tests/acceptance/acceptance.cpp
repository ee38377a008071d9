// Runs every experiment on the standard Gaussian dataset and prints one
// PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wkbnls/config.hpp"
#include "wkbnls/experiments.hpp"
#include "wkbnls/results.hpp"

namespace {

using wkb::Check;
using wkb::FitSummary;
using wkb::RunRecord;

struct Verdict {
  bool pass = true;
  std::string detail;

  void add(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!ok) detail += (detail.empty() ? "" : "; ") + what;
  }
};

template <class... A>
std::string format(const char* pattern, A... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Folds the checks whose names start with any of the prefixes; a criterion with
// no matching check fails.
Verdict from_checks(const RunRecord& r, std::initializer_list<const char*> prefixes) {
  Verdict v;
  int seen = 0;
  for (const Check& c : r.checks)
    for (const char* p : prefixes)
      if (starts_with(c.name, p)) {
        ++seen;
        v.add(c.passed, format("%s=%.4g (limit %.4g)", c.name.c_str(), c.value, c.threshold));
        break;
      }
  v.add(seen > 0, "no matching checks");
  for (const auto& f : r.failures) v.add(false, f);
  if (v.pass) v.detail = std::to_string(seen) + " checks";
  return v;
}

Verdict from_fits(const RunRecord& r, std::initializer_list<const char*> groups) {
  Verdict v;
  std::string summary;
  int seen = 0;
  for (const FitSummary& f : r.fits)
    for (const char* g : groups)
      if (f.group == g) {
        ++seen;
        const std::string line = f.fitted ? format("%s slope %.3f (want %.2f+-%.2f, r2 %.4f)",
                                                             f.family.c_str(), f.fit.slope, f.expected,
                                                             f.tolerance, f.fit.r_squared)
                                          : f.family + ": " + f.note;
        summary += (summary.empty() ? "" : "; ") + line + (f.passed() ? "" : " out of band");
        v.pass = v.pass && f.passed();
        break;
      }
  v.detail = summary;
  v.add(seen > 0, "no fitted families");
  for (const auto& f : r.failures) v.add(false, f);
  return v;
}

Verdict merge(Verdict a, const Verdict& b) {
  if (a.pass && b.pass) {
    a.detail += "; " + b.detail;
    return a;
  }
  Verdict out;
  if (!a.pass) out.add(false, a.detail);
  if (!b.pass) out.add(false, b.detail);
  return out;
}

RunRecord timed(const wkb::ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord r = wkb::run_experiment(cfg);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "[%s finished in %.1f s]\n", cfg.experiment.c_str(), s);
  return r;
}

std::string csv_of(wkb::ExperimentConfig cfg, int threads) {
  cfg.threads = threads;
  return wkb::rows_to_csv(wkb::run_experiment(cfg).rows);
}

}  // namespace

int main() {
  const RunRecord inv = timed(wkb::default_config("invariants"));
  const RunRecord con = timed(wkb::default_config("contraction"));
  const RunRecord swp = timed(wkb::default_config("sweep"));
  const RunRecord cor = timed(wkb::default_config("corrector"));
  const RunRecord crv = timed(wkb::default_config("crossval"));

  Verdict determinism;
  {
    wkb::ExperimentConfig small = wkb::default_config("sweep");
    small.grid.n = 256;
    small.eps = wkb::EpsSpec::range(1.0 / 64, 0.25, 3);
    const std::string a = csv_of(small, 1), b = csv_of(small, 1), c = csv_of(small, 4);
    determinism.add(a == b, "repeated runs differ");
    determinism.add(a == c, "1 and 4 threads differ");
    if (determinism.pass)
      determinism.detail = std::to_string(a.size()) + " identical CSV bytes across repeats and thread counts";
  }

  const std::vector<std::pair<std::string, Verdict>> criteria{
      {"norm identity", from_checks(inv, {"norm_identity"})},
      {"radius-shrink derivative", from_checks(inv, {"radius_derivative_slope"})},
      {"semigroup isometry and group law", from_checks(inv, {"semigroup_isometry_group_law"})},
      {"toolbox inequalities", from_checks(inv, {"toolbox:"})},
      {"scheme contraction", from_checks(con, {"contraction_ratio", "scheme_converged", "scheme_vs_direct"})},
      {"uniform energy bounds", from_checks(con, {"energy_iterates", "energy_solution"})},
      {"semiclassical rates", merge(from_fits(swp, {"half", "one"}), from_checks(swp, {"sweep_step_halving"}))},
      {"corrector rate", from_fits(cor, {"two", "one"})},
      {"phi1 triviality", from_checks(cor, {"phi1_case_"})},
      {"exact uniform solution and covariance",
       from_checks(inv, {"uniform_solution", "uniform_assembly", "scaling_covariance", "galilean_covariance"})},
      {"split-step cross-validation", from_checks(crv, {"crossval_agreement", "crossval_halving"})},
      {"quadratic observables", from_checks(crv, {"observable_"})},
      {"profile constructions",
       from_checks(inv, {"g1_", "g2_", "f2_", "h1_", "derivative_profiles_finite_norm", "infinite_limit_growth"})},
      {"mass conservation", merge(from_checks(inv, {"mass_conservation"}), from_checks(crv, {"mass_drift"}))},
      {"determinism", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, v] = criteria[i];
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, name.c_str(), v.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
