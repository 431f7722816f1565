#include "ddkl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"

namespace ddkl {

namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, size_t offset) {
  int line = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError(section + "." + it.key(), "unknown field");
  }
}

double get_num(const json& obj, const std::string& section,
               const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError(section + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& section, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(section + "." + key, "expected an integer");
  return v.get<int>();
}

long get_long(const json& obj, const std::string& section,
              const std::string& key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(section + "." + key, "expected an integer");
  return v.get<long>();
}

std::uint64_t get_seed(const json& obj, const std::string& section,
                       const std::string& key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<double>() < 0)
    throw ConfigError(section + "." + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& section,
              const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(section + "." + key, "expected a bool");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& section,
                    const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string())
    throw ConfigError(section + "." + key, "expected a string");
  return v.get<std::string>();
}

Eigen::Vector3d get_vec3(const json& obj, const std::string& section,
                         const std::string& key, const Eigen::Vector3d& fb) {
  if (!obj.contains(key)) return fb;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3)
    throw ConfigError(section + "." + key, "expected an array of 3 numbers");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out(i) = v.at(i).get<double>();
  return out;
}

Eigen::VectorXd get_vecn(const json& obj, const std::string& section,
                         const std::string& key, const Eigen::VectorXd& fb,
                         int n) {
  if (!obj.contains(key)) return fb;
  const json& v = obj.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ConfigError(section + "." + key,
                      "expected an array of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = v.at(i).get<double>();
  return out;
}

std::vector<std::pair<int, int>> get_pairs(const json& obj,
                                           const std::string& section,
                                           const std::string& key,
                                           const std::vector<std::pair<int, int>>& fb) {
  if (!obj.contains(key)) return fb;
  const json& v = obj.at(key);
  if (!v.is_array())
    throw ConfigError(section + "." + key, "expected an array of [a, b] pairs");
  std::vector<std::pair<int, int>> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError(section + "." + key, "each entry must be an [a, b] pair");
    out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  return out;
}

json pairs_json(const std::vector<std::pair<int, int>>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back(json::array({a, b}));
  return out;
}

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["vessel"] = {
      {"mass", c.vessel.mass},
      {"inertia", c.vessel.inertia},
      {"added_mass", vec_json(c.vessel.added_mass)},
      {"damping_linear", vec_json(c.vessel.damping_linear)},
      {"damping_quadratic", vec_json(c.vessel.damping_quadratic)},
      {"thruster_offset", c.vessel.thruster_offset},
      {"max_thrust", c.vessel.max_thrust},
  };
  j["data"] = {
      {"T", c.data.T},
      {"dt", c.data.dt},
      {"sigma", c.data.sigma},
      {"hold", c.data.hold},
      {"seed", c.data.seed},
      {"intervals", pairs_json(c.data.intervals)},
      {"train_end", c.data.train_end},
      {"test_end", c.data.test_end},
  };
  j["graph"] = {
      {"n_agents", c.graph.n_agents},
      {"edges", pairs_json(c.graph.edges)},
  };
  j["lift"] = {
      {"r", c.lift.r},
      {"hidden", c.lift.hidden},
      {"normalize", c.lift.normalize},
  };
  j["consensus"] = {
      {"c", c.consensus.c},
      {"weights", c.consensus.weights},
      {"matrix_rounds", c.consensus.matrix_rounds},
      {"log_oracle_dist", c.consensus.log_oracle_dist},
      {"loss_weighting", c.consensus.loss_weighting},
  };
  j["theta"] = {
      {"alpha", c.theta.alpha},
      {"theta_rounds", c.theta.theta_rounds},
      {"outer_rounds", c.theta.outer_rounds},
      {"threshold", c.theta.threshold},
      {"max_theta_steps", c.theta.max_theta_steps},
      {"rule", c.theta.rule},
      {"mixing", c.theta.mixing},
      {"theta_seed", c.theta.theta_seed},
      {"matrix_seed", c.theta.matrix_seed},
      {"n_runs", c.theta.n_runs},
      {"dko_max_steps", c.theta.dko_max_steps},
      {"dko_init", c.theta.dko_init},
      {"mlp_max_steps", c.theta.mlp_max_steps},
  };
  j["mpc"] = {
      {"horizon", c.mpc.solver.horizon},
      {"q", vec_json(c.mpc.solver.q)},
      {"qf", vec_json(c.mpc.solver.qf)},
      {"r", vec_json(c.mpc.solver.r_weights)},
      {"dt", c.mpc.solver.dt},
      {"u_min", c.mpc.solver.u_min},
      {"u_max", c.mpc.solver.u_max},
      {"wrap_yaw", c.mpc.solver.wrap_yaw},
      {"samples", c.mpc.solver.samples},
      {"elites", c.mpc.solver.elites},
      {"iterations", c.mpc.solver.iterations},
      {"init_std", c.mpc.solver.init_std},
      {"min_std", c.mpc.solver.min_std},
      {"seed", c.mpc.solver.seed},
      {"x0", vec_json(c.mpc.x0)},
      {"goal", vec_json(c.mpc.goal)},
      {"max_steps", c.mpc.max_steps},
  };
  j["paths"] = {
      {"out_dir", c.paths.out_dir},
      {"trajectory", c.paths.trajectory},
  };
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("json", "parse error at line " +
                                  std::to_string(line_of_offset(text, e.byte)) +
                                  ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("json", "top level must be an object");
  check_keys(j, "config",
             {"vessel", "data", "graph", "lift", "consensus", "theta", "mpc",
              "paths"});

  ExperimentConfig c;
  const json empty = json::object();

  {
    const json& o = j.contains("vessel") ? j.at("vessel") : empty;
    check_keys(o, "vessel",
               {"mass", "inertia", "added_mass", "damping_linear",
                "damping_quadratic", "thruster_offset", "max_thrust"});
    c.vessel.mass = get_num(o, "vessel", "mass", c.vessel.mass);
    c.vessel.inertia = get_num(o, "vessel", "inertia", c.vessel.inertia);
    c.vessel.added_mass = get_vec3(o, "vessel", "added_mass", c.vessel.added_mass);
    c.vessel.damping_linear =
        get_vec3(o, "vessel", "damping_linear", c.vessel.damping_linear);
    c.vessel.damping_quadratic =
        get_vec3(o, "vessel", "damping_quadratic", c.vessel.damping_quadratic);
    c.vessel.thruster_offset =
        get_num(o, "vessel", "thruster_offset", c.vessel.thruster_offset);
    c.vessel.max_thrust = get_num(o, "vessel", "max_thrust", c.vessel.max_thrust);
  }
  {
    const json& o = j.contains("data") ? j.at("data") : empty;
    check_keys(o, "data",
               {"T", "dt", "sigma", "hold", "seed", "intervals", "train_end",
                "test_end"});
    c.data.T = get_int(o, "data", "T", c.data.T);
    c.data.dt = get_num(o, "data", "dt", c.data.dt);
    c.data.sigma = get_num(o, "data", "sigma", c.data.sigma);
    c.data.hold = get_int(o, "data", "hold", c.data.hold);
    c.data.seed = get_seed(o, "data", "seed", c.data.seed);
    c.data.intervals = get_pairs(o, "data", "intervals", c.data.intervals);
    c.data.train_end = get_int(o, "data", "train_end", c.data.train_end);
    c.data.test_end = get_int(o, "data", "test_end", c.data.test_end);
  }
  {
    const json& o = j.contains("graph") ? j.at("graph") : empty;
    check_keys(o, "graph", {"n_agents", "edges"});
    c.graph.n_agents = get_int(o, "graph", "n_agents", c.graph.n_agents);
    c.graph.edges = get_pairs(o, "graph", "edges", c.graph.edges);
  }
  {
    const json& o = j.contains("lift") ? j.at("lift") : empty;
    check_keys(o, "lift", {"r", "hidden", "normalize"});
    c.lift.r = get_int(o, "lift", "r", c.lift.r);
    c.lift.hidden = get_int(o, "lift", "hidden", c.lift.hidden);
    c.lift.normalize = get_bool(o, "lift", "normalize", c.lift.normalize);
  }
  {
    const json& o = j.contains("consensus") ? j.at("consensus") : empty;
    check_keys(o, "consensus",
               {"c", "weights", "matrix_rounds", "log_oracle_dist",
                "loss_weighting"});
    c.consensus.c = get_num(o, "consensus", "c", c.consensus.c);
    c.consensus.weights = get_str(o, "consensus", "weights", c.consensus.weights);
    c.consensus.matrix_rounds =
        get_int(o, "consensus", "matrix_rounds", c.consensus.matrix_rounds);
    c.consensus.log_oracle_dist =
        get_bool(o, "consensus", "log_oracle_dist", c.consensus.log_oracle_dist);
    c.consensus.loss_weighting =
        get_str(o, "consensus", "loss_weighting", c.consensus.loss_weighting);
  }
  {
    const json& o = j.contains("theta") ? j.at("theta") : empty;
    check_keys(o, "theta",
               {"alpha", "theta_rounds", "outer_rounds", "threshold",
                "max_theta_steps", "rule", "mixing", "theta_seed", "matrix_seed",
                "n_runs", "dko_max_steps", "dko_init", "mlp_max_steps"});
    c.theta.alpha = get_num(o, "theta", "alpha", c.theta.alpha);
    c.theta.theta_rounds = get_int(o, "theta", "theta_rounds", c.theta.theta_rounds);
    c.theta.outer_rounds = get_int(o, "theta", "outer_rounds", c.theta.outer_rounds);
    c.theta.threshold = get_num(o, "theta", "threshold", c.theta.threshold);
    c.theta.max_theta_steps =
        get_long(o, "theta", "max_theta_steps", c.theta.max_theta_steps);
    c.theta.rule = get_str(o, "theta", "rule", c.theta.rule);
    c.theta.mixing = get_str(o, "theta", "mixing", c.theta.mixing);
    c.theta.theta_seed = get_seed(o, "theta", "theta_seed", c.theta.theta_seed);
    c.theta.matrix_seed = get_seed(o, "theta", "matrix_seed", c.theta.matrix_seed);
    c.theta.n_runs = get_int(o, "theta", "n_runs", c.theta.n_runs);
    c.theta.dko_max_steps =
        get_long(o, "theta", "dko_max_steps", c.theta.dko_max_steps);
    c.theta.dko_init = get_str(o, "theta", "dko_init", c.theta.dko_init);
    c.theta.mlp_max_steps =
        get_long(o, "theta", "mlp_max_steps", c.theta.mlp_max_steps);
  }
  {
    const json& o = j.contains("mpc") ? j.at("mpc") : empty;
    check_keys(o, "mpc",
               {"horizon", "q", "qf", "r", "dt", "u_min", "u_max", "wrap_yaw",
                "samples", "elites", "iterations", "init_std", "min_std", "seed",
                "x0", "goal", "max_steps"});
    c.mpc.solver.horizon = get_int(o, "mpc", "horizon", c.mpc.solver.horizon);
    c.mpc.solver.q = get_vecn(o, "mpc", "q", c.mpc.solver.q, 6);
    c.mpc.solver.qf = get_vecn(o, "mpc", "qf", c.mpc.solver.qf, 6);
    c.mpc.solver.r_weights = get_vecn(o, "mpc", "r", c.mpc.solver.r_weights, 2);
    c.mpc.solver.dt = get_num(o, "mpc", "dt", c.data.dt);
    c.mpc.solver.u_min = get_num(o, "mpc", "u_min", c.mpc.solver.u_min);
    c.mpc.solver.u_max = get_num(o, "mpc", "u_max", c.mpc.solver.u_max);
    c.mpc.solver.wrap_yaw = get_bool(o, "mpc", "wrap_yaw", c.mpc.solver.wrap_yaw);
    c.mpc.solver.samples = get_int(o, "mpc", "samples", c.mpc.solver.samples);
    c.mpc.solver.elites = get_int(o, "mpc", "elites", c.mpc.solver.elites);
    c.mpc.solver.iterations =
        get_int(o, "mpc", "iterations", c.mpc.solver.iterations);
    c.mpc.solver.init_std = get_num(o, "mpc", "init_std", c.mpc.solver.init_std);
    c.mpc.solver.min_std = get_num(o, "mpc", "min_std", c.mpc.solver.min_std);
    c.mpc.solver.seed = get_seed(o, "mpc", "seed", c.mpc.solver.seed);
    c.mpc.x0 = get_vecn(o, "mpc", "x0", c.mpc.x0, 6);
    c.mpc.goal = get_vecn(o, "mpc", "goal", c.mpc.goal, 6);
    c.mpc.max_steps = get_int(o, "mpc", "max_steps", c.mpc.max_steps);
  }
  {
    const json& o = j.contains("paths") ? j.at("paths") : empty;
    check_keys(o, "paths", {"out_dir", "trajectory"});
    c.paths.out_dir = get_str(o, "paths", "out_dir", c.paths.out_dir);
    c.paths.trajectory = get_str(o, "paths", "trajectory", c.paths.trajectory);
  }

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  vessel.validate();
  if (data.T < 2) throw ConfigError("data.T", "must be >= 2");
  if (!(data.dt > 0.0)) throw ConfigError("data.dt", "must be > 0");
  if (!(data.sigma > 0.0)) throw ConfigError("data.sigma", "must be > 0");
  if (data.hold < 1) throw ConfigError("data.hold", "must be >= 1");
  if (data.intervals.empty())
    throw ConfigError("data.intervals", "need at least one interval");
  for (const auto& [a, b] : data.intervals) {
    if (a < 0 || b > data.T || a >= b)
      throw ConfigError("data.intervals",
                        "interval [" + std::to_string(a) + ", " +
                            std::to_string(b) +
                            "] must satisfy 0 <= start < end <= T");
  }
  if (data.train_end < 1 || data.train_end > data.T)
    throw ConfigError("data.train_end", "must be in [1, T]");
  if (data.test_end <= data.train_end || data.test_end > data.T)
    throw ConfigError("data.test_end", "must be in (train_end, T]");
  if (graph.n_agents < 1) throw ConfigError("graph.n_agents", "must be >= 1");
  if (static_cast<int>(data.intervals.size()) != graph.n_agents)
    throw ConfigError("data.intervals", "need exactly one interval per agent");
  if (lift.r < 1) throw ConfigError("lift.r", "must be >= 1");
  if (lift.hidden < 1) throw ConfigError("lift.hidden", "must be >= 1");
  if (!(consensus.c > 0.0)) throw ConfigError("consensus.c", "must be > 0");
  if (consensus.weights != "uniform")
    throw ConfigError("consensus.weights", "only \"uniform\" is supported");
  if (consensus.matrix_rounds < 1)
    throw ConfigError("consensus.matrix_rounds", "must be >= 1");
  if (consensus.loss_weighting != "uniform" &&
      consensus.loss_weighting != "per-agent")
    throw ConfigError("consensus.loss_weighting",
                      "expected \"uniform\" or \"per-agent\"");
  if (!(theta.alpha > 0.0)) throw ConfigError("theta.alpha", "must be > 0");
  if (theta.theta_rounds < 1)
    throw ConfigError("theta.theta_rounds", "must be >= 1");
  if (theta.outer_rounds < 1)
    throw ConfigError("theta.outer_rounds", "must be >= 1");
  if (!(theta.threshold > 0.0))
    throw ConfigError("theta.threshold", "must be > 0");
  if (theta.max_theta_steps < 1)
    throw ConfigError("theta.max_theta_steps", "must be >= 1");
  if (theta.rule != "adam" && theta.rule != "subgradient")
    throw ConfigError("theta.rule", "expected \"adam\" or \"subgradient\"");
  if (theta.mixing != "metropolis" && theta.mixing != "uniform-rows")
    throw ConfigError("theta.mixing",
                      "expected \"metropolis\" or \"uniform-rows\"");
  if (theta.n_runs < 1) throw ConfigError("theta.n_runs", "must be >= 1");
  if (theta.dko_max_steps < 1)
    throw ConfigError("theta.dko_max_steps", "must be >= 1");
  if (theta.dko_init != "ls" && theta.dko_init != "random")
    throw ConfigError("theta.dko_init", "expected \"ls\" or \"random\"");
  if (theta.mlp_max_steps < 1)
    throw ConfigError("theta.mlp_max_steps", "must be >= 1");
  mpc.solver.validate();
  if (mpc.max_steps < 1) throw ConfigError("mpc.max_steps", "must be >= 1");
  if (paths.out_dir.empty()) throw ConfigError("paths.out_dir", "must not be empty");
  if (paths.trajectory.empty())
    throw ConfigError("paths.trajectory", "must not be empty");
  build_graph();  // endpoint and connectivity checks
}

std::string ExperimentConfig::canonical_json() const {
  return to_json(*this).dump(2);
}

std::string ExperimentConfig::config_hash() const {
  return io::hash_hex(io::fnv1a(canonical_json()));
}

Graph ExperimentConfig::build_graph() const {
  return ddkl::build_graph(graph.n_agents, graph.edges);
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.n = 3;
  t.m = 2;
  t.r = lift.r;
  t.hidden = lift.hidden;
  t.outer_rounds = theta.outer_rounds;
  t.matrix_rounds = consensus.matrix_rounds;
  t.theta_rounds = theta.theta_rounds;
  t.c = consensus.c;
  t.alpha = theta.alpha;
  t.threshold = theta.threshold;
  t.max_theta_steps = theta.max_theta_steps;
  t.theta_rule = theta.rule;
  t.mixing = theta.mixing;
  t.loss_weighting = consensus.loss_weighting;
  t.log_oracle_dist = consensus.log_oracle_dist;
  t.theta_seed = theta.theta_seed;
  t.matrix_seed = theta.matrix_seed;
  t.intervals = data.intervals;
  t.train_end = data.train_end;
  t.test_end = data.test_end;
  t.dko_max_steps = theta.dko_max_steps;
  t.dko_init = theta.dko_init;
  t.mlp_max_steps = theta.mlp_max_steps;
  t.n_runs = theta.n_runs;
  return t;
}

std::string default_config_json() { return ExperimentConfig{}.canonical_json(); }

Scaler fit_scaler(const ExperimentConfig& cfg, const Trajectory& traj) {
  if (!cfg.lift.normalize) return Scaler{};
  const int T = std::min(cfg.data.train_end, traj.T());
  Eigen::MatrixXd V(3, T + 1);
  for (int t = 0; t <= T; ++t) V.col(t) = traj.states[t].v;
  return Scaler::fit(V);
}

}  // namespace ddkl
