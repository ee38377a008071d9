#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "profiles.hpp"
#include "setup.hpp"

namespace wkb {

using json = nlohmann::json;

/// Either an explicit list or a {min, max, count, geometric} range.
struct EpsSpec {
  std::vector<double> list;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
  bool geometric = true;

  static EpsSpec range(double lo, double hi, int n, bool geo = true) {
    EpsSpec e;
    e.min = lo;
    e.max = hi;
    e.count = n;
    e.geometric = geo;
    return e;
  }

  std::vector<double> values() const {
    if (!list.empty()) return list;
    detail::require(count >= 1, "eps: count must be >= 1");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
      const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out.push_back(geometric ? min * std::pow(max / min, s) : min + s * (max - min));
    }
    return out;
  }
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"sweep", "contraction", "crossval", "corrector", "invariants"};
  return k;
}

struct ExperimentConfig {
  std::string experiment = "sweep";
  std::string id;
  GridSpec grid;
  ParamSpec params;
  FamilySpec data;
  EpsSpec eps;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 1;
  double tol = 1e-10;
  int k_max = 40;

  void validate() const {
    bool known = false;
    for (const auto& k : experiment_kinds()) known = known || k == experiment;
    detail::require(known, "config: unknown experiment '" + experiment + "'");
    detail::require(grid.d == 1 || grid.d == 2, "config: grid.d must be 1 or 2");
    detail::require(grid.n >= 8 && grid.n % 2 == 0, "config: grid.n must be even and >= 8");
    detail::require(grid.L > 0.0, "config: grid.L must be positive");
    detail::require(threads >= 1, "config: threads must be >= 1");
    detail::require(tol > 0.0 && k_max >= 1, "config: tol > 0 and k_max >= 1 required");
    data.validate();
    for (const auto* ps : {&data.psi0, &data.phi0, &data.psi1, &data.phi1, &data.psi_rem, &data.phi_rem})
      ps->validate();
    const auto e = eps.values();
    for (double x : e) detail::require(x >= 0.0 && x <= 1.0, "config: eps values must lie in [0, 1]");
    if (experiment == "sweep" || experiment == "corrector") {
      int positive = 0;
      for (double x : e) positive += x > 0.0;
      detail::require(positive >= 3, "config: rate fitting needs at least 3 positive eps values");
    }
    if (!eps.list.empty()) return;
    detail::require(eps.min > 0.0 || !eps.geometric, "config: geometric eps range needs min > 0");
    detail::require(eps.max >= eps.min, "config: eps.max must be >= eps.min");
  }
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

}  // namespace detail

inline void from_json(const json& j, ProfileSpec& s) {
  detail::reject_unknown(j, {"kind", "amplitude", "center", "width", "a_minus", "a_plus", "sign_plus", "sign_minus",
                             "window"},
                         "profile");
  const ProfileSpec d;
  const auto limit = [&](const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      throw ConfigError("config: limit '" + s + "' is not a number or +-inf");
    }
    return v.get<double>();
  };
  s.kind = j.value("kind", d.kind);
  s.amplitude = j.value("amplitude", d.amplitude);
  s.center = j.value("center", d.center);
  s.width = j.value("width", d.width);
  s.a_minus = limit("a_minus", d.a_minus);
  s.a_plus = limit("a_plus", d.a_plus);
  s.sign_plus = j.value("sign_plus", d.sign_plus);
  s.sign_minus = j.value("sign_minus", d.sign_minus);
  s.window = j.value("window", d.window);
}

inline void to_json(json& j, const ProfileSpec& s) {
  const auto limit = [](double a) -> json {
    if (std::isinf(a)) return a > 0 ? "inf" : "-inf";
    return a;
  };
  j = json{{"kind", s.kind},
           {"amplitude", s.amplitude},
           {"center", s.center},
           {"width", s.width},
           {"a_minus", limit(s.a_minus)},
           {"a_plus", limit(s.a_plus)},
           {"sign_plus", s.sign_plus},
           {"sign_minus", s.sign_minus},
           {"window", s.window}};
}

/// Standard dataset: psi_in = phi_in = 0.5 exp(-x^2/2) on the default grid.
inline ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.id = experiment;
  c.data.psi0 = {.kind = "gaussian_bump", .amplitude = 0.5};
  c.data.phi0 = {.kind = "gaussian_bump", .amplitude = 0.5};
  if (experiment == "sweep") {
    c.eps = EpsSpec::range(std::ldexp(1.0, -9), 0.25, 8);
  } else if (experiment == "corrector") {
    c.data.psi1 = {.kind = "gaussian_bump", .amplitude = 0.3, .center = 0.5};
    c.data.phi1 = {.kind = "gaussian_bump", .amplitude = 0.2, .center = -0.5};
    c.eps = EpsSpec::range(std::ldexp(1.0, -7), 0.25, 6);
  } else if (experiment == "contraction") {
    c.eps.list = {0.0, 0.01, 0.1, 0.5, 1.0};
  } else if (experiment == "crossval") {
    c.eps.list = {0.5, 0.25, 0.125};
  } else {
    c.eps.list = {0.5};
  }
  return c;
}

inline ExperimentConfig parse_config(const json& j) {
  detail::reject_unknown(j, {"experiment", "id", "grid", "params", "data", "eps", "seed", "out_dir", "threads", "tol",
                             "k_max"},
                         "top level");
  ExperimentConfig c = default_config(j.value("experiment", std::string("sweep")));
  c.id = j.value("id", c.experiment);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    detail::reject_unknown(g, {"d", "n", "L"}, "grid");
    c.grid.d = g.value("d", c.grid.d);
    c.grid.n = g.value("n", c.grid.n);
    c.grid.L = g.value("L", c.grid.L);
  }
  if (j.contains("params")) {
    const json& p = j.at("params");
    detail::reject_unknown(p, {"lambda", "delta_in", "ell", "dt", "T_cap", "margin", "K_ell", "K_trials",
                               "quadratic_weight", "min_steps"},
                           "params");
    ParamSpec& q = c.params;
    q.lambda = p.value("lambda", q.lambda);
    q.delta_in = p.value("delta_in", q.delta_in);
    q.ell = p.value("ell", q.ell);
    q.dt = p.value("dt", q.dt);
    q.T_cap = p.value("T_cap", q.T_cap);
    q.margin = p.value("margin", q.margin);
    if (p.contains("K_ell") && !p.at("K_ell").is_null()) q.K_ell = p.at("K_ell").get<double>();
    q.K_trials = p.value("K_trials", q.K_trials);
    q.quadratic_weight = p.value("quadratic_weight", q.quadratic_weight);
    q.min_steps = p.value("min_steps", q.min_steps);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    detail::reject_unknown(d, {"psi0", "phi0", "psi1", "phi1", "psi_rem", "phi_rem", "remainder_exponent"}, "data");
    FamilySpec& f = c.data;
    if (d.contains("psi0")) f.psi0 = d.at("psi0").get<ProfileSpec>();
    if (d.contains("phi0")) f.phi0 = d.at("phi0").get<ProfileSpec>();
    if (d.contains("psi1")) f.psi1 = d.at("psi1").get<ProfileSpec>();
    if (d.contains("phi1")) f.phi1 = d.at("phi1").get<ProfileSpec>();
    if (d.contains("psi_rem")) f.psi_rem = d.at("psi_rem").get<ProfileSpec>();
    if (d.contains("phi_rem")) f.phi_rem = d.at("phi_rem").get<ProfileSpec>();
    f.remainder_exponent = d.value("remainder_exponent", f.remainder_exponent);
  }
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (e.is_array()) {
      c.eps.list = e.get<std::vector<double>>();
    } else {
      detail::reject_unknown(e, {"min", "max", "count", "geometric"}, "eps");
      c.eps.min = e.at("min").get<double>();
      c.eps.max = e.at("max").get<double>();
      c.eps.count = e.at("count").get<int>();
      c.eps.geometric = e.value("geometric", true);
    }
  }
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  c.tol = j.value("tol", c.tol);
  c.k_max = j.value("k_max", c.k_max);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

/// Canonical form of a validated config, with the eps values resolved.
inline json to_json(const ExperimentConfig& c) {
  json params{{"lambda", c.params.lambda},   {"delta_in", c.params.delta_in},
              {"ell", c.params.ell},         {"dt", c.params.dt},
              {"T_cap", c.params.T_cap},     {"margin", c.params.margin},
              {"K_trials", c.params.K_trials}, {"quadratic_weight", c.params.quadratic_weight},
              {"min_steps", c.params.min_steps}};
  params["K_ell"] = c.params.K_ell ? json(*c.params.K_ell) : json(nullptr);
  return json{{"experiment", c.experiment},
              {"id", c.id},
              {"grid", {{"d", c.grid.d}, {"n", c.grid.n}, {"L", c.grid.L}}},
              {"params", params},
              {"data",
               {{"psi0", c.data.psi0},
                {"phi0", c.data.phi0},
                {"psi1", c.data.psi1},
                {"phi1", c.data.phi1},
                {"psi_rem", c.data.psi_rem},
                {"phi_rem", c.data.phi_rem},
                {"remainder_exponent", c.data.remainder_exponent}}},
              {"eps", c.eps.values()},
              {"seed", c.seed},
              {"out_dir", c.out_dir},
              {"threads", c.threads},
              {"tol", c.tol},
              {"k_max", c.k_max}};
}

/// FNV-1a of the canonical config with output location and thread count removed.
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("out_dir");
  j.erase("threads");
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace wkb
