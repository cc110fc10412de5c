#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "socmab/errors.hpp"
#include "socmab/protocol.hpp"
#include "socmab/sim.hpp"

// JSON configuration files. Unknown keys are rejected so typos surface early.

namespace socmab {

struct ServerSettings {
  int port = 8080;
  std::string data_dir = "data";
  std::string token;  // empty disables the bearer check
};

/// Everything a study configuration file can carry.
struct StudyFile {
  StudyConfig study;
  SimOptions simulation;
  std::optional<std::string> attribute_pool_path;
  ServerSettings server;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

inline void read_range(const nlohmann::json& j, const char* key, Range<double>& out,
                       const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_number()) {
    out = {v.get<double>(), v.get<double>()};
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    out = {v[0].get<double>(), v[1].get<double>()};
  } else {
    throw ConfigError(where + ": '" + key + "' must be a number or [lo, hi]");
  }
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

inline StudyFile study_file_from_json(const nlohmann::json& j) {
  using detail::read;
  const std::string where = "study config";
  detail::reject_unknown(j,
                         {"baseline_days", "total_days", "non_wear_threshold", "default_baseline_steps",
                          "weights", "strategy", "likert_min", "likert_max", "seed", "warm_start",
                          "simulation", "attribute_pool", "server"},
                         where);
  StudyFile f;
  StudyConfig& c = f.study;
  read(j, "baseline_days", c.baseline_days, where);
  read(j, "total_days", c.total_days, where);
  read(j, "non_wear_threshold", c.non_wear_threshold, where);
  read(j, "default_baseline_steps", c.default_baseline_steps, where);
  read(j, "likert_min", c.likert.min, where);
  read(j, "likert_max", c.likert.max, where);
  read(j, "seed", c.seed, where);
  read(j, "warm_start", c.warm_start, where);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    detail::reject_unknown(w, {"motivation", "steps"}, "weights");
    read(w, "motivation", c.weights.motivation, "weights");
    read(w, "steps", c.weights.steps, "weights");
  }
  if (j.contains("strategy")) {
    const auto& s = j.at("strategy");
    std::string kind = "ucb1";
    read(s, "kind", kind, "strategy");
    if (kind == "ucb1") {
      detail::reject_unknown(s, {"kind", "exploration_c"}, "strategy");
      Ucb1 u;
      read(s, "exploration_c", u.exploration_c, "strategy");
      c.strategy = u;
    } else if (kind == "epsilon_greedy") {
      detail::reject_unknown(s, {"kind", "epsilon"}, "strategy");
      EpsilonGreedy e;
      read(s, "epsilon", e.epsilon, "strategy");
      c.strategy = e;
    } else {
      throw ConfigError("strategy: unknown kind '" + kind + "'");
    }
  }
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    detail::reject_unknown(s, {"start_date", "window_days"}, "simulation");
    if (s.contains("start_date")) {
      const auto d = parse_date(s.at("start_date").get<std::string>());
      if (!d) throw ConfigError("simulation: start_date must be YYYY-MM-DD");
      f.simulation.start_date = *d;
    }
    read(s, "window_days", f.simulation.window_days, "simulation");
  }
  if (j.contains("attribute_pool")) f.attribute_pool_path = j.at("attribute_pool").get<std::string>();
  if (j.contains("server")) {
    const auto& s = j.at("server");
    detail::reject_unknown(s, {"port", "data_dir", "token"}, "server");
    read(s, "port", f.server.port, "server");
    read(s, "data_dir", f.server.data_dir, "server");
    read(s, "token", f.server.token, "server");
  }
  c.validate();
  return f;
}

inline StudyFile load_study_file(const std::string& path) {
  StudyFile f = study_file_from_json(detail::parse_json_file(path));
  if (f.attribute_pool_path) {
    std::filesystem::path pool(*f.attribute_pool_path);
    if (pool.is_relative()) pool = std::filesystem::path(path).parent_path() / pool;
    f.simulation.pool = load_attribute_pool(pool.string());
  }
  return f;
}

inline PopulationSpec population_from_json(const nlohmann::json& j) {
  using detail::read;
  const std::string where = "population";
  detail::reject_unknown(j,
                         {"n_users", "theta", "tau", "alpha", "beta", "base_steps", "step_noise_sigma",
                          "adherence", "female_fraction", "seed"},
                         where);
  PopulationSpec p;
  read(j, "n_users", p.n_users, where);
  read(j, "female_fraction", p.female_fraction, where);
  read(j, "seed", p.seed, where);
  detail::read_range(j, "tau", p.tau, where);
  detail::read_range(j, "alpha", p.alpha, where);
  detail::read_range(j, "beta", p.beta, where);
  detail::read_range(j, "base_steps", p.base_steps, where);
  detail::read_range(j, "step_noise_sigma", p.step_noise_sigma, where);
  detail::read_range(j, "adherence", p.adherence, where);
  if (j.contains("theta")) {
    const auto& t = j.at("theta");
    std::string kind;
    read(t, "kind", kind, "theta");
    if (kind == "uniform") {
      detail::reject_unknown(t, {"kind", "lo", "hi"}, "theta");
      theta_dist::Uniform u;
      read(t, "lo", u.lo, "theta");
      read(t, "hi", u.hi, "theta");
      p.theta = u;
    } else if (kind == "bimodal") {
      detail::reject_unknown(t, {"kind", "theta0", "mix"}, "theta");
      theta_dist::Bimodal b;
      read(t, "theta0", b.theta0, "theta");
      read(t, "mix", b.mix, "theta");
      p.theta = b;
    } else if (kind == "point") {
      detail::reject_unknown(t, {"kind", "theta"}, "theta");
      theta_dist::Point pt;
      read(t, "theta", pt.theta, "theta");
      p.theta = pt;
    } else {
      throw ConfigError("theta: kind must be uniform, bimodal or point");
    }
  }
  p.validate();
  return p;
}

inline PopulationSpec load_population(const std::string& path) {
  return population_from_json(detail::parse_json_file(path));
}

/// Environment overrides for the server: SOCMAB_PORT, SOCMAB_DATA_DIR, SOCMAB_TOKEN,
/// SOCMAB_SEED.
inline void apply_env_overrides(StudyFile& f) {
  if (const char* v = std::getenv("SOCMAB_PORT")) {
    try {
      f.server.port = std::stoi(v);
    } catch (const std::exception&) {
      throw ConfigError("SOCMAB_PORT is not a number");
    }
  }
  if (const char* v = std::getenv("SOCMAB_DATA_DIR")) f.server.data_dir = v;
  if (const char* v = std::getenv("SOCMAB_TOKEN")) f.server.token = v;
  if (const char* v = std::getenv("SOCMAB_SEED")) {
    try {
      f.study.seed = std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError("SOCMAB_SEED is not a number");
    }
  }
}

}  // namespace socmab
