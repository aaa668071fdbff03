#include "hsa/cli/app.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsa/cli/experiment.hpp"
#include "hsa/error.hpp"
#include "hsa/planning.hpp"
#include "hsa/sim/closed_loop.hpp"
#include "hsa/sim/excitation.hpp"
#include "hsa/sim/metrics.hpp"
#include "hsa/sysid.hpp"
#include "hsa/verify.hpp"

namespace hsa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json to_json(const PlanResult& p) {
  return {{"q_d", {p.q_d.kappa_be, p.q_d.sigma_sh, p.q_d.sigma_ax}},
          {"phi_ss", {p.phi_ss(0), p.phi_ss(1)}},
          {"chi_ee_d", {p.chi_ee_d.p_x, p.chi_ee_d.p_y, p.chi_ee_d.theta}},
          {"residual", p.residual},
          {"iterations", p.iterations}};
}

fs::path prepare_out(const ExperimentConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
}

RobotState rest_state(const HsaModel& model) { return {model.rest_configuration(), Eigen::Vector3d::Zero()}; }

sim::PiecewiseConstantSignal build_excitation(const ExcitationConfig& e, const HsaParams& p, std::uint64_t seed) {
  if (e.kind == "gbn") return sim::gbn_sequence(e.settling_time, p.phi_max, e.duration, e.dt, seed);
  if (e.kind == "constant") return sim::step_staircase_sequence({e.phi}, e.duration, e.dt);
  if (e.kind == "step") {
    if (e.levels.empty()) throw ConfigError("excitation.levels is required for kind 'step'");
    return sim::step_staircase_sequence(e.levels, e.hold_time, e.dt);
  }
  const auto levels = sim::staircase_levels(ActuationAngles::Zero(), ActuationAngles::Constant(p.phi_max),
                                            e.staircase_steps);
  return sim::step_staircase_sequence(levels, e.hold_time, e.dt);
}

int cmd_simulate(const ExperimentConfig& c, const HsaModel& model, std::ostream& out) {
  const auto input = build_excitation(c.excitation, model.params(), c.seed);
  const sim::Trajectory traj = sim::simulate_open_loop(model, rest_state(model), input, c.sim);
  const fs::path file = prepare_out(c) / "trajectory.csv";
  traj.write_csv(file.string());
  out << "simulate: " << traj.size() << " samples over " << num(traj.back().t) << " s, final |q_dot| "
      << num(traj.back().state.q_dot.norm()) << "\nwrote " << file.string() << "\n";
  return kOk;
}

int cmd_plan(const ExperimentConfig& c, const HsaModel& model, std::ostream& out, std::ostream& err) {
  if (!c.target) throw ConfigError("plan: --target X Y (or \"target\" in the config) is required");
  try {
    const PlanResult p = plan(*c.target, model, c.planner);
    json j = to_json(p);
    j["method"] = to_string(c.planner.method);
    j["converged"] = true;
    out << j.dump(2) << "\n";
    return kOk;
  } catch (const PlannerNoConvergeError& e) {
    json j = to_json(e.best());
    j["method"] = to_string(c.planner.method);
    j["converged"] = false;
    out << j.dump(2) << "\n";
    err << "error: " << e.what() << "\n";
    return kPlannerFailure;
  }
}

int cmd_control(const ExperimentConfig& c, const HsaModel& model, std::ostream& out) {
  const sim::ControllerKind kind = sim::controller_from_string(c.controller);
  std::vector<sim::Setpoint> reference;
  double duration = c.sim.duration;
  if (c.reference.kind == "waypoints") {
    reference = plan_waypoints(model, read_waypoints_csv(c.reference.waypoints_path), c.planner);
    if (!(duration > 0.0)) duration = reference.back().t_start + c.reference.hold_time;
  } else {
    reference = eleven_step_reference(model, c.reference, c.planner, c.seed);
    if (!(duration > 0.0)) duration = c.reference.steps * c.reference.hold_time;
  }
  sim::SimConfig sc = c.sim;
  sc.duration = duration;
  sc.seed = c.seed;
  const sim::Trajectory traj = sim::closed_loop_sim(model, rest_state(model), reference, kind, c.gains, sc);

  std::vector<double> starts;
  for (const auto& s : reference) starts.push_back(s.t_start);
  const auto steps = sim::step_metrics(traj, starts, 1e-3);
  json summary;
  summary["controller"] = sim::to_string(kind);
  summary["material"] = model.params().name;
  summary["rmse"] = sim::trajectory_rmse(traj);
  summary["steps"] = json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& m = steps[i];
    auto nan_safe = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    summary["steps"].push_back({{"t_start", m.t_start},
                                {"target", {m.target(0), m.target(1)}},
                                {"phi_ss", {reference[i].plan.phi_ss(0), reference[i].plan.phi_ss(1)}},
                                {"steady_state_error", m.final_error},
                                {"time_to_90", nan_safe(m.time_to_90)},
                                {"settle_time_1mm", nan_safe(m.settle_time)}});
  }
  const fs::path dir = prepare_out(c);
  traj.write_csv((dir / "trajectory.csv").string());
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << "\nwrote " << (dir / "trajectory.csv").string() << " and "
      << (dir / "summary.json").string() << "\n";
  return kOk;
}

int cmd_workspace(const ExperimentConfig& c, const HsaModel& model, std::ostream& out, std::ostream& err) {
  const auto points = workspace_map(model, c.workspace, c.planner);
  const fs::path file = prepare_out(c) / "workspace.csv";
  std::ofstream f(file);
  if (!f) throw ConfigError("cannot write '" + file.string() + "'");
  f << "pee_x,pee_y,mean_phi\n";
  std::size_t failed = 0;
  for (const auto& p : points) {
    if (!p.ok) {
      ++failed;
      continue;
    }
    f << num(p.p_ee(0)) << ',' << num(p.p_ee(1)) << ',' << num(p.mean_phi) << '\n';
  }
  if (failed > 0) err << "warning: " << failed << " grid points did not reach a steady state\n";
  out << "workspace: " << points.size() - failed << " of " << points.size() << " points\nwrote "
      << file.string() << "\n";
  return kOk;
}

int cmd_verify(const ExperimentConfig& c, const HsaModel& model, std::ostream& out) {
  VerifyOptions o = c.verify;
  o.seed = c.seed + 1;
  const VerifyReport report = run_verification(model, o);
  out << report.to_json();
  return report.passed() ? kOk : kPropertyFailure;
}

int cmd_sysid(const ExperimentConfig& c, const HsaModel& model, std::ostream& out) {
  const HsaParams& p = model.params();
  sim::Trajectory traj;
  std::string source;
  if (!c.sysid.trajectory_path.empty()) {
    traj = sim::Trajectory::read_csv(c.sysid.trajectory_path);
    source = c.sysid.trajectory_path;
  } else {
    std::vector<ActuationAngles> levels;
    const int n = c.sysid.grid;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) levels.emplace_back(p.phi_max * a / (n - 1), p.phi_max * b / (n - 1));
    }
    const auto input = sim::step_staircase_sequence(levels, c.sysid.hold_time, 1e-3);
    sim::SimConfig sc = c.sim;
    sc.duration = 0.0;
    if (!(sc.log_interval > 0.0)) sc.log_interval = 1e-2;
    traj = sim::simulate_open_loop(model, rest_state(model), input, sc);
    source = "simulated staircase, material " + p.name;
  }
  SysIdDataset data = extract_steady_states(traj, c.sysid.settle_tol);
  if (c.sysid.noise > 0.0) {
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> noise(0.0, c.sysid.noise);
    for (auto& s : data.samples) {
      s.q.kappa_be *= 1.0 + noise(rng);
      s.q.sigma_sh *= 1.0 + noise(rng);
      s.q.sigma_ax *= 1.0 + noise(rng);
    }
  }
  const ElongationFit ef = regress_elongation(data, p);
  StiffnessFitOptions so;
  so.estimate_c_eps = c.sysid.estimate_c_eps;
  const StiffnessFit sf = regress_stiffness(data, p, so);

  HsaParams identified = p;
  identified.name = p.name + "-identified";
  identified.c_eps = ef.c_eps;
  identified.stiffness = sf.stiffness;
  const fs::path file = prepare_out(c) / "identified.json";
  write_text(file, params_to_json_text(identified, "system identification from " + source));

  json j;
  j["samples"] = data.samples.size();
  j["c_eps_elongation_fit"] = ef.c_eps;
  j["c_eps_stiffness_fit"] = sf.c_eps;
  const auto& k = sf.stiffness;
  j["stiffness"] = {{"S_be_hat", k.S_be_hat}, {"C_S_be", k.C_S_be}, {"S_sh_hat", k.S_sh_hat},
                    {"C_S_sh", k.C_S_sh},     {"S_ax_hat", k.S_ax_hat}, {"C_S_ax", k.C_S_ax},
                    {"S_b_sh", k.S_b_sh}};
  j["residual_rms"] = sf.residual_rms;
  out << j.dump(2) << "\nwrote " << file.string() << "\n";
  return kOk;
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Planar HSA robot: simulation, planning, control and identification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, material, controller, out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<double> target;
  app.add_option("--config", config_path, "experiment config (JSON, comments allowed)");
  app.add_option("--material", material, "fpu, epu or a material file");
  app.add_option("--seed", seed, "seed for excitation, references and noise");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--controller", controller, "pid, psatid or psatid-gc");

  auto* simulate = app.add_subcommand("simulate", "open-loop response to an excitation");
  auto* plan_cmd = app.add_subcommand("plan", "steady-state plan for a target position");
  plan_cmd->add_option("--target", target, "target end-effector position X Y [m]")->expected(2);
  auto* control = app.add_subcommand("control", "closed-loop regulation along a reference");
  auto* workspace = app.add_subcommand("workspace", "steady-state workspace over a twist grid");
  auto* verify = app.add_subcommand("verify", "run the model property checks");
  auto* sysid = app.add_subcommand("sysid", "identify elongation and stiffness coefficients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kConfigError;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment(config_path);
    if (!material.empty()) cfg.material = material;
    if (!controller.empty()) {
      (void)sim::controller_from_string(controller);
      cfg.controller = controller;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (!target.empty()) cfg.target = Eigen::Vector2d(target[0], target[1]);

    const HsaModel model(resolve_material(cfg.material));

    if (simulate->parsed()) return cmd_simulate(cfg, model, out);
    if (plan_cmd->parsed()) return cmd_plan(cfg, model, out, err);
    if (control->parsed()) return cmd_control(cfg, model, out);
    if (workspace->parsed()) return cmd_workspace(cfg, model, out, err);
    if (verify->parsed()) return cmd_verify(cfg, model, out);
    if (sysid->parsed()) return cmd_sysid(cfg, model, out);
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PlannerNoConvergeError& e) {
    err << "planner error: " << e.what() << "\n";
    return kPlannerFailure;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace hsa::cli
