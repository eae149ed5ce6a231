#include "spoofguard/config.hpp"

#include "spoofguard/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace spoofguard {

namespace {

using Keys = std::set<std::string>;

void check_keys(const YAML::Node& node, const Keys& allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(where + ": " + e.msg);
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
  if (const auto n = parent[key]) out = scalar<T>(n, where + "." + key);
}

Vec vector_of(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) throw ConfigError(where + ": expected a list of numbers");
  Vec v(static_cast<Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<Index>(i)) = scalar<double>(n[i], where);
  return v;
}

void read_vec(const YAML::Node& parent, const char* key, Vec& out, const std::string& where) {
  if (const auto n = parent[key]) out = vector_of(n, where + "." + key);
}

// Matrices are lists of rows.
Mat matrix_of(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(where + ": expected a list of rows");
  const auto rows = static_cast<Index>(n.size());
  const Vec first = vector_of(n[0], where);
  Mat m(rows, first.size());
  for (Index r = 0; r < rows; ++r) {
    const Vec row = vector_of(n[static_cast<std::size_t>(r)], where);
    if (row.size() != m.cols()) throw ConfigError(where + ": ragged matrix rows");
    m.row(r) = row.transpose();
  }
  return m;
}

void read_mat(const YAML::Node& parent, const char* key, Mat& out, const std::string& where) {
  if (const auto n = parent[key]) out = matrix_of(n, where + "." + key);
}

std::vector<Index> index_list(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) throw ConfigError(where + ": expected a list of indices");
  std::vector<Index> out;
  for (const auto& e : n) {
    const long v = scalar<long>(e, where);
    if (v < 0) throw ConfigError(where + ": negative index");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

EscController controller_from(const std::string& s) {
  if (s == "tube") return EscController::Tube;
  if (s == "potential") return EscController::Potential;
  if (s == "tube_with_fallback") return EscController::TubeWithFallback;
  throw ConfigError("escape.controller: expected tube, potential or tube_with_fallback, got '" + s + "'");
}

void read_solver(const YAML::Node& n, OptimizerSettings& s, const std::string& where) {
  check_keys(n, {"max_iterations", "tolerance", "feasibility_tolerance", "initial_penalty",
                 "penalty_growth", "max_inner_iterations"},
             where);
  read(n, "max_iterations", s.max_iterations, where);
  read(n, "tolerance", s.tolerance, where);
  read(n, "feasibility_tolerance", s.feasibility_tolerance, where);
  read(n, "initial_penalty", s.initial_penalty, where);
  read(n, "penalty_growth", s.penalty_growth, where);
  read(n, "max_inner_iterations", s.max_inner_iterations, where);
}

// Power that puts the spoofer/genuine crossover at r_effect: eta_S * r^2 / C_S.
double prior_power_guess(const ScenarioConfig& c) {
  if (c.model.C_S.size() == 0 || c.model.eta_S.size() == 0 || !(c.model.C_S(0) > 0.0)) return 100.0;
  return c.model.eta_S(0) * c.attacker.r_effect * c.attacker.r_effect / c.model.C_S(0);
}

ScenarioConfig paper_v() {
  ScenarioConfig c;
  c.name = "paper-v";
  constexpr double eta = 200.0;
  constexpr double r_effect = 30.0;
  c.model = double_integrator_model(genuine_strength_for_range(eta, 1.0, r_effect));
  c.start = Vec::Zero(4);
  c.goal = Vec::Zero(4);
  c.goal << 300.0, 300.0, 0.0, 0.0;
  c.steps = 1500;
  c.attacker.position = Vec::Constant(2, 100.0);
  c.attacker.eta = eta;
  c.attacker.d = Vec::Constant(2, 10.0);
  c.attacker.r_effect = r_effect;
  c.alt.window = 5;
  c.alt.prior_offset = Vec::Constant(2, 10.0);
  c.alt.prior_power = prior_power_guess(c);
  c.alt.prior_std = Vec(3);
  c.alt.prior_std << 50.0, 50.0, 100.0;
  c.alt.process_std = Vec(3);
  c.alt.process_std << 0.05, 0.05, 0.5;
  c.escape.q_diag = Vec(4);
  c.escape.q_diag << 1e-4, 1e-4, 1e-6, 1e-6;
  c.escape.r_diag = Vec::Constant(2, 1e-3);
  return c;
}

ScenarioConfig paper_v_near() {
  ScenarioConfig c = paper_v();
  c.name = "paper-v-near";
  c.attacker.r_effect = 40.0;
  c.model.eta_S = Vec::Constant(1, genuine_strength_for_range(c.attacker.eta, 1.0, 40.0));
  c.attacker.activation_distance = 15.0;
  c.alt.prior_power = prior_power_guess(c);
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"paper-v", "paper-v-near"}; }

ScenarioConfig preset(std::string_view name) {
  if (name == "paper-v") return paper_v();
  if (name == "paper-v-near") return paper_v_near();
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  check_keys(root, {"schema_version", "preset", "name", "steps", "seed", "goal_tolerance",
                    "stop_after_exit", "P0_scale", "start", "goal", "model", "attacker", "detector",
                    "alt", "escape", "robust"},
             "config");
  if (!root["schema_version"]) throw ConfigError("config: schema_version is required");
  const int version = scalar<int>(root["schema_version"], "schema_version");
  if (version != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(version));

  ScenarioConfig c = root["preset"] ? preset(scalar<std::string>(root["preset"], "preset")) : paper_v();
  if (!root["preset"]) c.name = "custom";
  read(root, "name", c.name, "config");
  read(root, "steps", c.steps, "config");
  read(root, "seed", c.seed, "config");
  read(root, "goal_tolerance", c.goal_tolerance, "config");
  read(root, "stop_after_exit", c.stop_after_exit, "config");
  read(root, "P0_scale", c.P0_scale, "config");
  read_vec(root, "start", c.start, "config");
  read_vec(root, "goal", c.goal, "config");

  bool eta_S_given = false;
  if (const auto m = root["model"]) {
    if (m.IsScalar()) {
      if (m.as<std::string>() != "paper-default")
        throw ConfigError("model: the only named model is 'paper-default'");
    } else {
      check_keys(m, {"A", "B", "C_G", "C_I", "C_S", "Sigma_w", "Sigma_G", "Sigma_I", "Sigma_S",
                     "eta_S", "pos_index", "vel_index"},
                 "model");
      read_mat(m, "A", c.model.A, "model");
      read_mat(m, "B", c.model.B, "model");
      read_mat(m, "C_G", c.model.C_G, "model");
      read_mat(m, "C_I", c.model.C_I, "model");
      read_vec(m, "C_S", c.model.C_S, "model");
      read_mat(m, "Sigma_w", c.model.Sigma_w, "model");
      read_mat(m, "Sigma_G", c.model.Sigma_G, "model");
      read_mat(m, "Sigma_I", c.model.Sigma_I, "model");
      read_mat(m, "Sigma_S", c.model.Sigma_S, "model");
      if (m["eta_S"]) {
        read_vec(m, "eta_S", c.model.eta_S, "model");
        eta_S_given = true;
      }
      if (m["pos_index"]) c.model.pos_index = index_list(m["pos_index"], "model.pos_index");
      if (m["vel_index"]) c.model.vel_index = index_list(m["vel_index"], "model.vel_index");
    }
  }

  bool range_given = false;
  if (const auto a = root["attacker"]) {
    check_keys(a, {"enabled", "position", "eta", "d", "r_effect", "activation_distance", "motion"},
               "attacker");
    read(a, "enabled", c.attacker.enabled, "attacker");
    read_vec(a, "position", c.attacker.position, "attacker");
    read(a, "eta", c.attacker.eta, "attacker");
    read_vec(a, "d", c.attacker.d, "attacker");
    if (a["r_effect"]) {
      read(a, "r_effect", c.attacker.r_effect, "attacker");
      range_given = true;
    }
    read(a, "activation_distance", c.attacker.activation_distance, "attacker");
    if (const auto mo = a["motion"]) {
      if (!mo.IsSequence()) throw ConfigError("attacker.motion: expected a list of offsets");
      c.attacker.motion.clear();
      for (const auto& step : mo) c.attacker.motion.push_back(vector_of(step, "attacker.motion"));
    }
  }
  // Exactly one of r_effect / eta_S is the free parameter; the other follows.
  if (range_given && eta_S_given)
    throw ConfigError("config: give attacker.r_effect or model.eta_S, not both");
  if (eta_S_given) {
    if (c.model.C_S.size() == 0 || c.model.eta_S.size() == 0)
      throw ConfigError("model: C_S and eta_S must be non-empty");
    c.attacker.r_effect = effective_range(c.attacker.eta, c.model.C_S(0), c.model.eta_S(0));
  } else if (c.model.C_S.size() > 0) {
    Vec eta_S(c.model.C_S.size());
    for (Index i = 0; i < eta_S.size(); ++i)
      eta_S(i) = genuine_strength_for_range(c.attacker.eta, c.model.C_S(i), c.attacker.r_effect);
    c.model.eta_S = eta_S;
  }

  if (!root["alt"] || !root["alt"]["prior_power"]) c.alt.prior_power = prior_power_guess(c);

  if (const auto d = root["detector"]) {
    check_keys(d, {"alpha", "delta"}, "detector");
    read(d, "alpha", c.detector_alpha, "detector");
    read(d, "delta", c.detector_delta, "detector");
  }
  if (const auto a = root["alt"]) {
    check_keys(a, {"window", "prior_offset", "prior_power", "prior_std", "process_std", "reuse_steps"}, "alt");
    read(a, "window", c.alt.window, "alt");
    read_vec(a, "prior_offset", c.alt.prior_offset, "alt");
    read(a, "prior_power", c.alt.prior_power, "alt");
    read_vec(a, "prior_std", c.alt.prior_std, "alt");
    read_vec(a, "process_std", c.alt.process_std, "alt");
    read(a, "reuse_steps", c.alt.reuse_steps, "alt");
  }
  if (const auto e = root["escape"]) {
    check_keys(e, {"controller", "zeta", "alpha", "beta", "gamma", "horizon_offset", "min_horizon",
                   "q_diag", "r_diag", "v_max", "u_max", "k_esc_override", "solver", "resolve"},
               "escape");
    if (e["controller"]) c.escape.controller = controller_from(scalar<std::string>(e["controller"], "escape.controller"));
    read(e, "zeta", c.escape.zeta, "escape");
    read(e, "alpha", c.escape.alpha, "escape");
    read(e, "beta", c.escape.beta, "escape");
    read(e, "gamma", c.escape.gamma, "escape");
    read(e, "horizon_offset", c.escape.horizon_offset, "escape");
    read(e, "min_horizon", c.escape.min_horizon, "escape");
    read_vec(e, "q_diag", c.escape.q_diag, "escape");
    read_vec(e, "r_diag", c.escape.r_diag, "escape");
    read(e, "v_max", c.escape.v_max, "escape");
    read(e, "u_max", c.escape.u_max, "escape");
    read(e, "k_esc_override", c.escape.k_esc_override, "escape");
    if (e["solver"]) read_solver(e["solver"], c.escape.solver, "escape.solver");
    if (e["resolve"]) read_solver(e["resolve"], c.escape.resolve, "escape.resolve");
  }
  if (const auto r = root["robust"]) {
    check_keys(r, {"kp", "kd", "v_cruise", "u_max"}, "robust");
    read(r, "kp", c.robust.kp, "robust");
    read(r, "kd", c.robust.kd, "robust");
    read(r, "v_cruise", c.robust.v_cruise, "robust");
    read(r, "u_max", c.robust.u_max, "robust");
  }

  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace spoofguard
