#include "hsa/sim/closed_loop.hpp"

#include <cmath>
#include <deque>
#include <iostream>
#include <optional>
#include <random>

#include "hsa/collocated.hpp"
#include "hsa/error.hpp"
#include "hsa/sim/ode.hpp"
#include "hsa/sim/savgol.hpp"

namespace hsa::sim {

using State6 = Eigen::Matrix<double, 6, 1>;

namespace {

State6 pack(const RobotState& s) {
  State6 x;
  x << s.q.vec(), s.q_dot;
  return x;
}

RobotState unpack(const State6& x) {
  return {Configuration::from(x.head<3>()), x.tail<3>()};
}

int rounded_ratio(double period, double dt, const char* what) {
  const double ratio = period / dt;
  const long n = std::lround(ratio);
  if (n < 1) throw ConfigError(std::string("sim: ") + what + " period shorter than dt_physics");
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    std::cerr << "warning: " << what << " period " << period << " s is not a multiple of dt_physics; using "
              << static_cast<double>(n) * dt << " s\n";
  }
  return static_cast<int>(n);
}

// Controller-side view of the robot.
struct Observation {
  RobotState state;
  PlanarPose ee;
  Eigen::Vector2d ee_velocity{Eigen::Vector2d::Zero()};
};

// Pose-only measurement chain: samples the end-effector pose at a fixed rate, recovers q
// by inverse kinematics and velocities from a trailing polynomial fit.
class PosePipeline {
 public:
  PosePipeline(const HsaModel& model, const SimConfig& sim)
      : geom_(model.geom()),
        dt_(sim.steps_per_pose() * sim.dt_physics),
        window_(static_cast<std::size_t>(savgol_window_length(sim.savgol_window, dt_))),
        order_(sim.savgol_order),
        noise_std_(sim.pose_noise_std),
        rng_(sim.seed) {}

  void sample(const RobotState& truth) {
    PlanarPose pose = end_effector_pose(truth.q, geom_);
    if (noise_std_ > 0.0) {
      std::normal_distribution<double> n(0.0, noise_std_);
      pose.p_x += n(rng_);
      pose.p_y += n(rng_);
      pose.theta += n(rng_);
    }
    poses_.push_back(pose);
    qs_.push_back(inverse_kinematics(pose, geom_.l0).vec());
    while (poses_.size() > window_) {
      poses_.pop_front();
      qs_.pop_front();
    }
  }

  Observation observe() const {
    if (poses_.empty()) throw InternalConsistencyError("pose pipeline: no samples yet");
    const std::size_t n = poses_.size();
    Observation o;
    o.ee = poses_.back();
    o.state.q = Configuration::from(qs_.back());
    std::vector<double> buf(n);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = qs_[j](c);
      o.state.q_dot(c) = local_poly_derivative(buf.data(), n, n - 1, order_, dt_);
    }
    for (int c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = poses_[j].position()(c);
      o.ee_velocity(c) = local_poly_derivative(buf.data(), n, n - 1, order_, dt_);
    }
    return o;
  }

 private:
  BackboneGeometry geom_;
  double dt_;
  std::size_t window_;
  int order_;
  double noise_std_;
  std::mt19937_64 rng_;
  std::deque<PlanarPose> poses_;
  std::deque<Eigen::Vector3d> qs_;
};

Observation exact_observation(const HsaModel& model, const RobotState& s) {
  Observation o;
  o.state = s;
  o.ee = end_effector_pose(s.q, model.geom());
  o.ee_velocity = end_effector_jacobian(s.q, model.geom()).topRows<2>() * s.q_dot;
  return o;
}

void check_reference(const std::vector<Setpoint>& reference, ControllerKind kind) {
  if (reference.empty()) throw InvalidArgument("closed_loop_sim: empty reference");
  if (reference.front().t_start != 0.0) {
    throw InvalidArgument("closed_loop_sim: first setpoint must start at t = 0");
  }
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!reference[i].p_ee_d.allFinite()) throw InvalidArgument("closed_loop_sim: non-finite setpoint");
    if (i > 0 && !(reference[i].t_start > reference[i - 1].t_start)) {
      throw InvalidArgument("closed_loop_sim: setpoint times must be strictly increasing");
    }
    if (kind != ControllerKind::Pid && !reference[i].plan.phi_ss.allFinite()) {
      throw InvalidArgument("closed_loop_sim: model-based controller needs a finite plan");
    }
  }
}

}  // namespace

ControllerKind controller_from_string(const std::string& name) {
  if (name == "pid") return ControllerKind::Pid;
  if (name == "psatid") return ControllerKind::PSatID;
  if (name == "psatid-gc" || name == "psatid_gc") return ControllerKind::PSatIDGc;
  throw ConfigError("unknown controller '" + name + "' (expected pid, psatid or psatid-gc)");
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Pid: return "pid";
    case ControllerKind::PSatID: return "psatid";
    case ControllerKind::PSatIDGc: return "psatid-gc";
  }
  return "?";
}

void SimConfig::validate() const {
  if (!(dt_physics > 0.0) || !std::isfinite(dt_physics)) throw ConfigError("sim: dt_physics must be > 0");
  if (!(control_rate > 0.0) || !std::isfinite(control_rate)) throw ConfigError("sim: control_rate must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ConfigError("sim: duration must be >= 0");
  if (!(pose_rate > 0.0)) throw ConfigError("sim: pose_rate must be > 0");
  if (!(pose_noise_std >= 0.0)) throw ConfigError("sim: pose_noise_std must be >= 0");
  if (!(savgol_window > 0.0) || savgol_order < 1) throw ConfigError("sim: bad Savitzky-Golay settings");
  if (!(log_interval >= 0.0)) throw ConfigError("sim: log_interval must be >= 0");
  if (!initial_phi.allFinite()) throw ConfigError("sim: initial_phi must be finite");
}

int SimConfig::steps_per_control() const {
  return rounded_ratio(1.0 / control_rate, dt_physics, "control");
}

int SimConfig::steps_per_log() const {
  return log_interval > 0.0 ? rounded_ratio(log_interval, dt_physics, "log") : steps_per_control();
}

int SimConfig::steps_per_pose() const {
  return rounded_ratio(1.0 / pose_rate, dt_physics, "pose sampling");
}

Trajectory closed_loop_sim(const HsaModel& model, const RobotState& x0,
                           const std::vector<Setpoint>& reference, ControllerKind controller,
                           const Gains& gains, const SimConfig& sim) {
  sim.validate();
  gains.validate();
  check_reference(reference, controller);
  if (!(sim.duration > 0.0)) throw ConfigError("closed_loop_sim: duration must be > 0");

  const double dt = sim.dt_physics;
  const int n_control = sim.steps_per_control();
  const int n_log = sim.steps_per_log();
  const bool pipeline = sim.observation == ObservationMode::PosePipeline;
  const int n_pose = pipeline ? sim.steps_per_pose() : 0;
  const double control_dt = n_control * dt;
  const auto n_steps = static_cast<long>(std::llround(sim.duration / dt));

  std::optional<PosePipeline> pose_chain;
  if (pipeline) pose_chain.emplace(model, sim);

  Dopri5<State6> stepper;
  State6 x = pack(x0);
  ActuationAngles phi = sim.initial_phi;
  Eigen::Vector2d theta_c = Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
  ControllerState cstate;
  if (controller == ControllerKind::Pid) cstate = pid_bumpless_state(sim.initial_phi, gains);
  std::size_t active = 0;
  Trajectory traj;

  const auto rhs = [&](double, const State6& xs) -> State6 {
    const StateRate r = model.forward_dynamics(unpack(xs), phi);
    State6 d;
    d << r.q_dot, r.q_ddot;
    return d;
  };

  for (long k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const RobotState truth = unpack(x);
    if (pipeline && k % n_pose == 0) pose_chain->sample(truth);

    if (k % n_control == 0) {
      std::size_t seg = active;
      while (seg + 1 < reference.size() && reference[seg + 1].t_start <= t + 0.5 * dt) ++seg;
      if (seg != active && controller != ControllerKind::Pid) cstate = ControllerState{};
      active = seg;
      const Setpoint& sp = reference[active];
      const Observation obs = pipeline ? pose_chain->observe() : exact_observation(model, truth);

      ControlOutput out;
      switch (controller) {
        case ControllerKind::Pid:
          out = baseline_pid_step(obs.ee.position(), obs.ee_velocity, sp.p_ee_d, gains, cstate,
                                  control_dt);
          break;
        case ControllerKind::PSatID:
          out = p_sati_d_step(model, obs.state, sp.plan, gains, cstate, control_dt);
          break;
        case ControllerKind::PSatIDGc:
          out = p_sati_d_gc_step(model, obs.state, sp.plan, gains, cstate, control_dt);
          break;
      }
      if (controller != ControllerKind::Pid) {
        theta_c = collocated_map(model, obs.state.q, sp.plan.phi_ss).actuated();
      }
      cstate = out.state;
      phi = saturate(out.phi_cmd, model.params());
      stepper.invalidate();
    }

    if (k % n_log == 0) {
      TrajectorySample s;
      s.t = t;
      s.state = truth;
      s.phi = phi;
      s.ee = end_effector_pose(truth.q, model.geom());
      s.ref = reference[active].p_ee_d;
      s.theta_c = theta_c;
      traj.push_back(std::move(s));
    }
    if (k == n_steps) break;

    StepResult<State6> r = stepper.step(rhs, t, x, dt);
    if (!r.x.allFinite()) {
      throw IntegrationDivergedError("closed_loop_sim: state became non-finite", t);
    }
    x = r.x;
  }
  return traj;
}

Trajectory simulate_open_loop(const HsaModel& model, const RobotState& x0,
                              const PiecewiseConstantSignal& input, const SimConfig& sim) {
  sim.validate();
  if (input.values.empty()) throw InvalidArgument("simulate_open_loop: empty input signal");
  const double dt = sim.dt_physics;
  const double duration = sim.duration > 0.0 ? sim.duration : input.duration();
  const auto n_steps = static_cast<long>(std::llround(duration / dt));
  const int n_log = sim.steps_per_log();

  Dopri5<State6> stepper;
  State6 x = pack(x0);
  ActuationAngles phi = input.at(0.0);
  Trajectory traj;
  const auto rhs = [&](double, const State6& xs) -> State6 {
    const StateRate r = model.forward_dynamics(unpack(xs), phi);
    State6 d;
    d << r.q_dot, r.q_ddot;
    return d;
  };

  for (long k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ActuationAngles next = input.at(t);
    if (next != phi) {
      phi = next;
      stepper.invalidate();
    }
    if (k % n_log == 0) {
      TrajectorySample s;
      s.t = t;
      s.state = unpack(x);
      s.phi = phi;
      s.ee = end_effector_pose(s.state.q, model.geom());
      traj.push_back(std::move(s));
    }
    if (k == n_steps) break;
    StepResult<State6> r = stepper.step(rhs, t, x, dt);
    if (!r.x.allFinite()) {
      throw IntegrationDivergedError("simulate_open_loop: state became non-finite", t);
    }
    x = r.x;
  }
  return traj;
}

RobotState integrate_constant_input(const HsaModel& model, const RobotState& x0,
                                    const ActuationAngles& phi, double duration, double dt) {
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw InvalidArgument("integrate_constant_input: dt must be > 0 and duration >= 0");
  }
  const auto rhs = [&](double, const State6& xs) -> State6 {
    const StateRate r = model.forward_dynamics(unpack(xs), phi);
    State6 d;
    d << r.q_dot, r.q_ddot;
    return d;
  };
  const auto n = static_cast<long>(std::llround(duration / dt));
  Dopri5<State6> stepper;
  State6 x = pack(x0);
  for (long k = 0; k < n; ++k) {
    StepResult<State6> r = stepper.step(rhs, static_cast<double>(k) * dt, x, dt);
    if (!r.x.allFinite()) {
      throw IntegrationDivergedError("integrate_constant_input: state became non-finite",
                                     static_cast<double>(k) * dt);
    }
    x = r.x;
  }
  return unpack(x);
}

}  // namespace hsa::sim
