#include "hsa/cli/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hsa/error.hpp"

namespace hsa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void read_pair(const json& obj, const char* key, Eigen::Vector2d& dst) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (v.is_number()) {
    dst = Eigen::Vector2d::Constant(v.get<double>());
    return;
  }
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + ": expected a number or a 2-vector");
  dst = Eigen::Vector2d(v[0].get<double>(), v[1].get<double>());
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / p).string();
}

void parse_gains(const json& j, Gains& g) {
  check_keys(j, {"kp", "ki", "kd", "gamma", "kp_pid", "ki_pid", "kd_pid"}, "gains");
  read_pair(j, "kp", g.kp);
  read_pair(j, "ki", g.ki);
  read_pair(j, "kd", g.kd);
  read_pair(j, "gamma", g.gamma);
  read_pair(j, "kp_pid", g.kp_pid);
  read_pair(j, "ki_pid", g.ki_pid);
  read_pair(j, "kd_pid", g.kd_pid);
}

void parse_planner(const json& j, PlannerOptions& o) {
  check_keys(j, {"method", "t_ss", "rollout_dt", "settle_tol", "max_iters", "residual_tol", "lm_damping",
                 "fd_step", "multistart_count", "phi_bounds"},
             "planner");
  if (j.contains("method")) o.method = planner_method_from_string(j.at("method").get<std::string>());
  read(j, "t_ss", o.t_ss);
  read(j, "rollout_dt", o.rollout_dt);
  read(j, "settle_tol", o.settle_tol);
  read(j, "max_iters", o.max_iters);
  read(j, "residual_tol", o.residual_tol);
  read(j, "lm_damping", o.lm_damping);
  read(j, "fd_step", o.fd_step);
  read(j, "multistart_count", o.multistart_count);
  if (j.contains("phi_bounds")) {
    Eigen::Vector2d b;
    read_pair(j, "phi_bounds", b);
    o.phi_lower = b(0);
    o.phi_upper = b(1);
  }
}

void parse_sim(const json& j, sim::SimConfig& s) {
  check_keys(j, {"dt_physics", "control_rate", "duration", "observation", "pose_rate", "pose_noise_std",
                 "savgol_window", "savgol_order", "log_interval"},
             "sim");
  read(j, "dt_physics", s.dt_physics);
  read(j, "control_rate", s.control_rate);
  read(j, "duration", s.duration);
  read(j, "pose_rate", s.pose_rate);
  read(j, "pose_noise_std", s.pose_noise_std);
  read(j, "savgol_window", s.savgol_window);
  read(j, "savgol_order", s.savgol_order);
  read(j, "log_interval", s.log_interval);
  if (j.contains("observation")) {
    const auto mode = j.at("observation").get<std::string>();
    if (mode == "exact") {
      s.observation = sim::ObservationMode::Exact;
    } else if (mode == "pose-pipeline") {
      s.observation = sim::ObservationMode::PosePipeline;
    } else {
      throw ConfigError("sim.observation must be 'exact' or 'pose-pipeline'");
    }
  }
}

void parse_excitation(const json& j, ExcitationConfig& e) {
  check_keys(j, {"kind", "settling_time", "duration", "hold_time", "dt", "levels", "staircase_steps", "phi"},
             "excitation");
  read(j, "kind", e.kind);
  if (e.kind != "gbn" && e.kind != "step" && e.kind != "staircase" && e.kind != "constant") {
    throw ConfigError("excitation.kind must be gbn, step, staircase or constant");
  }
  read(j, "settling_time", e.settling_time);
  read(j, "duration", e.duration);
  read(j, "hold_time", e.hold_time);
  read(j, "dt", e.dt);
  read(j, "staircase_steps", e.staircase_steps);
  read_pair(j, "phi", e.phi);
  if (j.contains("levels")) {
    e.levels.clear();
    for (const json& l : j.at("levels")) {
      json wrap = {{"v", l}};
      Eigen::Vector2d v;
      read_pair(wrap, "v", v);
      e.levels.push_back(v);
    }
  }
}

void parse_reference(const json& j, ReferenceConfig& r, const std::string& base_dir) {
  check_keys(j, {"kind", "steps", "hold_time", "x_range", "y_range", "waypoints"}, "reference");
  read(j, "kind", r.kind);
  if (r.kind != "eleven-step" && r.kind != "waypoints") {
    throw ConfigError("reference.kind must be 'eleven-step' or 'waypoints'");
  }
  read(j, "steps", r.steps);
  read(j, "hold_time", r.hold_time);
  read_pair(j, "x_range", r.x_range);
  read_pair(j, "y_range", r.y_range);
  if (j.contains("waypoints")) r.waypoints_path = resolve_path(j.at("waypoints").get<std::string>(), base_dir);
}

void parse_workspace(const json& j, WorkspaceGrid& w) {
  check_keys(j, {"n1", "n2", "phi_bounds"}, "workspace");
  read(j, "n1", w.n1);
  read(j, "n2", w.n2);
  if (j.contains("phi_bounds")) {
    Eigen::Vector2d b;
    read_pair(j, "phi_bounds", b);
    w.phi_lower = b(0);
    w.phi_upper = b(1);
  }
}

void parse_sysid(const json& j, SysIdConfig& s, const std::string& base_dir) {
  check_keys(j, {"trajectory", "settle_tol", "grid", "hold_time", "noise", "estimate_c_eps"}, "sysid");
  if (j.contains("trajectory")) s.trajectory_path = resolve_path(j.at("trajectory").get<std::string>(), base_dir);
  read(j, "settle_tol", s.settle_tol);
  read(j, "grid", s.grid);
  read(j, "hold_time", s.hold_time);
  read(j, "noise", s.noise);
  read(j, "estimate_c_eps", s.estimate_c_eps);
}

void validate(const ExperimentConfig& c) {
  c.gains.validate();
  c.planner.validate();
  c.sim.validate();
  const auto& e = c.excitation;
  if (!(e.duration > 0.0) || !(e.hold_time > 0.0) || !(e.settling_time > 0.0) || !(e.dt > 0.0)) {
    throw ConfigError("excitation: durations must be > 0");
  }
  if (e.staircase_steps < 1) throw ConfigError("excitation.staircase_steps must be >= 1");
  const auto& r = c.reference;
  if (r.steps < 1 || !(r.hold_time > 0.0)) throw ConfigError("reference: steps >= 1 and hold_time > 0 required");
  if (!(r.x_range(0) <= r.x_range(1)) || !(r.y_range(0) <= r.y_range(1))) {
    throw ConfigError("reference: ranges must be ordered [lo, hi]");
  }
  if (r.kind == "waypoints" && r.waypoints_path.empty()) throw ConfigError("reference: waypoints path missing");
  if (r.kind == "waypoints" && !fs::exists(r.waypoints_path)) {
    throw ConfigError("reference: waypoints file '" + r.waypoints_path + "' does not exist");
  }
  if (!c.sysid.trajectory_path.empty() && !fs::exists(c.sysid.trajectory_path)) {
    throw ConfigError("sysid: trajectory file '" + c.sysid.trajectory_path + "' does not exist");
  }
  if (c.sysid.grid < 2 || !(c.sysid.hold_time > 0.0) || !(c.sysid.noise >= 0.0) || !(c.sysid.settle_tol >= 0.0)) {
    throw ConfigError("sysid: grid >= 2, hold_time > 0, noise >= 0 and settle_tol >= 0 required");
  }
  if (c.workspace.n1 < 1 || c.workspace.n2 < 1) throw ConfigError("workspace: grid must be non-empty");
  (void)sim::controller_from_string(c.controller);
}

}  // namespace

ExperimentConfig parse_experiment(std::string_view text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    check_keys(root, {"material", "controller", "gains", "planner", "sim", "excitation", "reference",
                      "workspace", "sysid", "verify_samples", "seed", "out", "target"},
               "experiment config");
    if (root.contains("material")) {
      c.material = root.at("material").get<std::string>();
      if (c.material != "fpu" && c.material != "epu" && c.material != "FPU" && c.material != "EPU") {
        c.material = resolve_path(c.material, base_dir);
      }
    }
    read(root, "controller", c.controller);
    if (root.contains("gains")) parse_gains(root.at("gains"), c.gains);
    if (root.contains("planner")) parse_planner(root.at("planner"), c.planner);
    if (root.contains("sim")) parse_sim(root.at("sim"), c.sim);
    if (root.contains("excitation")) parse_excitation(root.at("excitation"), c.excitation);
    if (root.contains("reference")) parse_reference(root.at("reference"), c.reference, base_dir);
    if (root.contains("workspace")) parse_workspace(root.at("workspace"), c.workspace);
    if (root.contains("sysid")) parse_sysid(root.at("sysid"), c.sysid, base_dir);
    read(root, "verify_samples", c.verify.samples);
    read(root, "seed", c.seed);
    if (root.contains("out")) c.out_dir = resolve_path(root.at("out").get<std::string>(), base_dir);
    if (root.contains("target")) {
      Eigen::Vector2d t;
      read_pair(root, "target", t);
      c.target = t;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), fs::path(path).parent_path().string());
}

std::vector<Waypoint> read_waypoints_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open waypoints '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("waypoints: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y") throw ConfigError("waypoints: header must be 't,x,y'");
  std::vector<Waypoint> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
      throw ConfigError("waypoints: expected three fields per row");
    }
    try {
      out.push_back({std::stod(a), Eigen::Vector2d(std::stod(b), std::stod(c))});
    } catch (const std::exception&) {
      throw ConfigError("waypoints: bad number in row '" + line + "'");
    }
    if (out.size() > 1 && !(out.back().t > out[out.size() - 2].t)) {
      throw ConfigError("waypoints: times must be strictly increasing");
    }
  }
  if (out.empty()) throw ConfigError("waypoints: no rows");
  if (out.front().t != 0.0) throw ConfigError("waypoints: first time must be 0");
  return out;
}

std::vector<sim::Setpoint> eleven_step_reference(const HsaModel& model, const ReferenceConfig& ref,
                                                 const PlannerOptions& planner, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(ref.x_range(0), ref.x_range(1));
  std::uniform_real_distribution<double> uy(ref.y_range(0), ref.y_range(1));
  std::vector<sim::Setpoint> out;
  for (int k = 0; k < ref.steps; ++k) {
    bool found = false;
    for (int attempt = 0; attempt < 200 && !found; ++attempt) {
      const double x = ux(rng), y = uy(rng);
      sim::Setpoint sp;
      sp.t_start = k * ref.hold_time;
      sp.p_ee_d = Eigen::Vector2d(x, y);
      try {
        sp.plan = plan(sp.p_ee_d, model, planner);
      } catch (const PlannerNoConvergeError&) {
        continue;
      }
      out.push_back(sp);
      found = true;
    }
    if (!found) {
      throw PlannerNoConvergeError("reference: no reachable setpoint found in the box", PlanResult{});
    }
  }
  return out;
}

std::vector<sim::Setpoint> plan_waypoints(const HsaModel& model, const std::vector<Waypoint>& waypoints,
                                          const PlannerOptions& planner) {
  std::vector<sim::Setpoint> out;
  out.reserve(waypoints.size());
  for (const Waypoint& w : waypoints) {
    sim::Setpoint sp;
    sp.t_start = w.t;
    sp.p_ee_d = w.p;
    sp.plan = plan(w.p, model, planner);
    out.push_back(sp);
  }
  return out;
}

}  // namespace hsa::cli
