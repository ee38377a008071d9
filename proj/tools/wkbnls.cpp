#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wkbnls/config.hpp"
#include "wkbnls/experiments.hpp"
#include "wkbnls/results.hpp"

namespace {

struct Globals {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  void apply(wkb::ExperimentConfig& c) const {
    if (out_dir) c.out_dir = *out_dir;
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
  }
};

void print_record(const wkb::RunRecord& r) {
  std::printf("experiment %s (%s), config %s\n", r.experiment_id.c_str(), r.experiment.c_str(), r.config_hash.c_str());
  std::printf("  omega_in %.6g  M %.6g  T %.6g (%s)  K_ell %.6g  steps %d  band %.4g\n", r.constants.omega_in,
              r.constants.M, r.constants.T, r.constants.binding.c_str(), r.K_ell, r.steps, r.band);
  for (const auto& f : r.fits) {
    if (f.fitted)
      std::printf("  fit   %-34s slope %8.4f  r2 %.5f  expected %.2f +- %.2f  %s\n", f.family.c_str(), f.fit.slope,
                  f.fit.r_squared, f.expected, f.tolerance, f.passed() ? "ok" : "FAIL");
    else
      std::printf("  fit   %-34s %s\n", f.family.c_str(), f.note.c_str());
  }
  for (const auto& c : r.checks)
    std::printf("  check %-34s %.4g (limit %.4g)  %s  %s\n", c.name.c_str(), c.value, c.threshold,
                c.passed ? "ok" : "FAIL", c.detail.c_str());
  for (const auto& f : r.failures) std::printf("  error %s\n", f.c_str());
  std::printf("  %s in %.2f s\n", r.passed() ? "passed" : "FAILED", r.wall_seconds);
}

int execute(wkb::ExperimentConfig cfg, const Globals& g) {
  g.apply(cfg);
  cfg.validate();
  const wkb::RunRecord r = wkb::run_experiment(cfg);
  print_record(r);
  wkb::emit_outputs({r}, cfg, cfg.out_dir);
  std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  return r.passed() ? 0 : 1;
}

int fit_csv(const std::string& path) {
  const auto rows = wkb::read_csv(path);
  const auto fits = wkb::fit_families(rows);
  if (fits.empty()) {
    std::printf("no rate series in %s\n", path.c_str());
    return 0;
  }
  bool ok = true;
  for (const auto& f : fits) {
    if (f.fitted) {
      std::printf("%-36s slope %8.4f  intercept %9.4f  r2 %.5f  points %d  expected %.2f  %s\n", f.family.c_str(),
                  f.fit.slope, f.fit.intercept, f.fit.r_squared, f.fit.used, f.expected, f.passed() ? "ok" : "FAIL");
      for (double e : f.fit.excluded_eps) std::printf("%-36s   eps %g excluded (below roundoff floor)\n", "", e);
    } else {
      std::printf("%-36s %s\n", f.family.c_str(), f.note.c_str());
    }
    ok = ok && (f.passed() || f.note == "all errors vanish");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WKB / logarithmic Schroedinger experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--out-dir", g.out_dir, "Output directory for results.csv, manifest.json and plot.gp");
  app.add_option("--seed", g.seed, "Seed for the product-constant calibration and randomized checks");
  app.add_option("--threads", g.threads, "Worker threads for the eps runs")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "Path to the JSON config")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Semiclassical eps sweep on the standard Gaussian data");
  double eps_min = std::ldexp(1.0, -9), eps_max = 0.25, lambda = 1.0, box_l = 20.0, ell = 3.0;
  int eps_count = 8, grid_n = 1024;
  sweep->add_option("--eps-min", eps_min, "Smallest eps")->capture_default_str();
  sweep->add_option("--eps-max", eps_max, "Largest eps")->capture_default_str();
  sweep->add_option("--eps-count", eps_count, "Number of geometric eps values")->capture_default_str();
  sweep->add_option("--grid-n", grid_n, "Nodes per dimension")->capture_default_str();
  sweep->add_option("--box-l", box_l, "Half-width L of the box [-L, L]")->capture_default_str();
  sweep->add_option("--ell", ell, "Regularity index")->capture_default_str();
  sweep->add_option("--lambda", lambda, "Nonlinearity coefficient")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit log-log rates to an existing results.csv");
  std::string input;
  fit->add_option("--input", input, "CSV produced by run or sweep")->required()->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check", "Run the invariant property suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(wkb::load_config(config_path), g);
    if (*sweep) {
      wkb::ExperimentConfig c = wkb::default_config("sweep");
      c.eps = wkb::EpsSpec::range(eps_min, eps_max, eps_count);
      c.grid.n = grid_n;
      c.grid.L = box_l;
      c.params.ell = ell;
      c.params.lambda = lambda;
      return execute(c, g);
    }
    if (*fit) return fit_csv(input);
    if (*check) return execute(wkb::default_config("invariants"), g);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
