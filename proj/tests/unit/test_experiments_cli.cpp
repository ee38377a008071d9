#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "wkbnls/config.hpp"
#include "wkbnls/experiments.hpp"
#include "wkbnls/results.hpp"

using namespace wkb;

namespace {

std::vector<std::pair<double, double>> power_law(double slope, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<std::pair<double, double>> pts;
  for (int j = 2; j <= 9; ++j) {
    const double eps = std::ldexp(1.0, -j);
    pts.emplace_back(eps, 0.7 * std::pow(eps, slope) * std::exp(n(rng)));
  }
  return pts;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("wkbnls_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

ExperimentConfig small_sweep() {
  ExperimentConfig c = default_config("sweep");
  c.grid.n = 256;
  c.eps = EpsSpec::range(1.0 / 64, 0.25, 3);
  return c;
}

}  // namespace

TEST(FitRate, RecoversSyntheticSlopes) {
  for (double slope : {0.5, 1.0, 2.0}) {
    const RateFit exact = fit_rate(power_law(slope, 0.0, 1));
    EXPECT_NEAR(exact.slope, slope, 1e-12);
    EXPECT_NEAR(exact.intercept, std::log(0.7), 1e-12);
    EXPECT_NEAR(exact.r_squared, 1.0, 1e-12);
    const RateFit noisy = fit_rate(power_law(slope, 0.05, 2));
    EXPECT_NEAR(noisy.slope, slope, 0.05);
    EXPECT_GT(noisy.r_squared, 0.98);
  }
}

TEST(FitRate, RoundoffFloorExcludesPoints) {
  auto pts = power_law(1.0, 0.0, 1);
  pts.back().second = 1e-16;
  pts.front().second = 0.0;
  const RateFit f = fit_rate(pts);
  EXPECT_EQ(f.used, 6);
  ASSERT_EQ(f.excluded_eps.size(), 2u);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_THROW(fit_rate({{0.1, 1.0}, {0.2, 2.0}}), ConfigError);
  EXPECT_THROW(fit_rate({{0.0, 1.0}, {0.1, 1.0}, {0.2, 2.0}}), ConfigError);
}

TEST(FitFamilies, ExpectedSlopesAndVanishingSeries) {
  std::vector<ResultRow> rows;
  for (const auto& [eps, err] : power_law(2.0, 0.0, 3)) {
    rows.push_back({"x", eps, "r", 1.0, 0.0, 0.0, err, "two"});
    rows.push_back({"x", eps, "z", 1.0, 0.0, 0.0, 0.0, "half"});
    rows.push_back({"x", eps, "c", 1.0, 0.0, 0.0, err, "component"});
  }
  const auto fits = fit_families(rows);
  ASSERT_EQ(fits.size(), 2u);
  EXPECT_EQ(fits[0].family, "x/r");
  EXPECT_TRUE(fits[0].passed());
  EXPECT_EQ(fits[1].note, "all errors vanish");
  EXPECT_FALSE(fits[1].fitted);
}

TEST(Csv, EmptyRecordSetIsHeaderOnly) {
  EXPECT_EQ(rows_to_csv({}), std::string(csv_header()) + "\r\n");
}

TEST(Csv, SortedQuotedAndRoundTrips) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<ResultRow> rows{{"b", 0.5, "f", 3.0, 1.0, 0.1, 1e-3, "one"},
                                    {"a", 0.25, "g,\"h\"", 2.5, 1.0, 0.1, nan, "none"},
                                    {"a", 0.125, "f", 2.5, 1.0, 0.1, 0.1 + 0.2, "half"}};
  const std::string csv = rows_to_csv(rows);
  EXPECT_NE(csv.find("\"g,\"\"h\"\"\""), std::string::npos);
  EXPECT_NE(csv.find(",NaN,"), std::string::npos);
  const auto dir = temp_dir("csv");
  std::filesystem::create_directories(dir);
  const auto path = (dir / "r.csv").string();
  std::ofstream(path, std::ios::binary) << csv;
  const auto back = read_csv(path);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].epsilon, 0.125);
  EXPECT_EQ(back[0].error_value, 0.1 + 0.2);
  EXPECT_EQ(back[1].norm_family, "g,\"h\"");
  EXPECT_TRUE(std::isnan(back[1].error_value));
  EXPECT_EQ(back[2].experiment_id, "b");
  EXPECT_EQ(rows_to_csv(back), csv);

  std::ofstream(path, std::ios::binary) << "wrong,header\r\n";
  EXPECT_THROW(read_csv(path), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, DefaultsAreValid) {
  for (const auto& k : experiment_kinds()) EXPECT_NO_THROW(default_config(k).validate()) << k;
  EXPECT_EQ(default_config("sweep").eps.values().size(), 8u);
  EXPECT_DOUBLE_EQ(default_config("sweep").eps.values().front(), std::ldexp(1.0, -9));
}

TEST(Config, ParsesOverridesAndRejectsMistakes) {
  const json ok = json::parse(R"({"experiment": "corrector", "grid": {"n": 512},
    "params": {"lambda": 2.0}, "eps": [0.1, 0.05, 0.025], "seed": 9,
    "data": {"psi1": {"kind": "erf_profile", "a_minus": 0, "a_plus": 1}}})");
  const ExperimentConfig c = parse_config(ok);
  EXPECT_EQ(c.grid.n, 512);
  EXPECT_EQ(c.params.lambda, 2.0);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.data.psi1.kind, "erf_profile");
  EXPECT_EQ(c.data.phi1.amplitude, 0.2);

  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "nope"})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"gird": {}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"grid": {"n": 7}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"eps": [0.1, 2.0, 0.3]})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"eps": [0.1, 0.2]})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"threads": 0})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"data": {"psi0": {"kind": "gaussian_bump", "amp": 1}}})")),
               ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, InfiniteLimitsRoundTrip) {
  const json j = json::parse(R"({"kind": "two_limit", "a_minus": "-inf", "a_plus": 1.5})");
  const ProfileSpec s = j.get<ProfileSpec>();
  EXPECT_TRUE(std::isinf(s.a_minus));
  EXPECT_EQ(json(s)["a_minus"], "-inf");
}

TEST(Config, HashIgnoresOutputLocationAndThreads) {
  ExperimentConfig a = default_config("sweep"), b = a;
  b.out_dir = "elsewhere";
  b.threads = 4;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Sweep, ZeroDataGiveZeroErrors) {
  ExperimentConfig c = small_sweep();
  c.params.K_ell = 0.1;
  c.data.psi0 = {.kind = "zero"};
  c.data.phi0 = {.kind = "zero"};
  const RunRecord r = run_experiment(c);
  ASSERT_TRUE(r.failures.empty()) << r.failures.front();
  for (const auto& row : r.rows) EXPECT_EQ(row.error_value, 0.0) << row.norm_family;
  for (const auto& f : r.fits) EXPECT_EQ(f.note, "all errors vanish");
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  ExperimentConfig c = small_sweep();
  const std::string one = rows_to_csv(run_experiment(c).rows);
  c.threads = 3;
  EXPECT_EQ(rows_to_csv(run_experiment(c).rows), one);
}

TEST(PhiSign, ProbeFavoursMinus) {
  const PhiSignReport r = verify_phi_sign({1, 256, 20.0}, ParamSpec{}, 1);
  EXPECT_LT(r.edge_plus, 1e-10);
  EXPECT_GT(r.edge_minus, 1e-4);
}

TEST(Outputs, ManifestAndPlotWritten) {
  ExperimentConfig c = small_sweep();
  const auto dir = temp_dir("out");
  c.out_dir = dir.string();
  const RunRecord r = run_experiment(c);
  emit_outputs({r}, c, c.out_dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "results.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "plot.gp"));
  std::ifstream in(dir / "manifest.json");
  const json m = json::parse(in);
  EXPECT_EQ(m["seed"], c.seed);
  EXPECT_EQ(m["runs"][0]["config_hash"], config_hash(c));
  EXPECT_TRUE(m["versions"].contains("fftw"));
  EXPECT_EQ(read_csv((dir / "results.csv").string()).size(), r.rows.size());
  std::filesystem::remove_all(dir);
}
