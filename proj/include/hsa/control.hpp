#pragma once

#include <Eigen/Dense>
#include <array>

#include "hsa/dynamics.hpp"
#include "hsa/kinematics.hpp"

namespace hsa {

// Steady-state plan consumed by the model-based controllers.
struct PlanResult {
  Configuration q_d;
  ActuationAngles phi_ss{ActuationAngles::Zero()};
  PlanarPose chi_ee_d;
  double residual{0.0};  // planner-specific residual expressed in metres
  int iterations{0};
};

// Diagonal gain matrices are stored as their diagonals.
struct Gains {
  // P-satI-D, acting on the actuated collocated coordinates
  Eigen::Vector2d kp{0.3, 0.3};
  Eigen::Vector2d ki{0.05, 0.05};    // [1/s]
  Eigen::Vector2d kd{0.01, 0.01};    // [s]
  Eigen::Vector2d gamma{100.0, 100.0};
  // model-free task-space baseline
  Eigen::Vector2d kp_pid{10.0, 10.0};    // [rad/m]
  Eigen::Vector2d ki_pid{110.0, 110.0};  // [rad/(m s)]
  Eigen::Vector2d kd_pid{0.25, 0.25};    // [rad s/m]

  void validate() const;
};

struct ControllerState {
  // P-satI-D: K_i * integral of tanh(gamma e). Baseline PID: integral of e (no gain).
  Eigen::Vector2d integral{Eigen::Vector2d::Zero()};
  double last_update_time{0.0};
};

struct ControlOutput {
  ActuationAngles phi_cmd;  // before saturation
  ControllerState state;
};

// P-satI-D with gravity compensation through phi_ss.
ControlOutput p_sati_d_step(const HsaModel& model, const RobotState& state, const PlanResult& plan,
                            const Gains& gains, const ControllerState& cstate, double dt);

// P-satI-D with gravity cancellation: adds G_a(q) - G_a(q_d) in collocated coordinates.
ControlOutput p_sati_d_gc_step(const HsaModel& model, const RobotState& state,
                               const PlanResult& plan, const Gains& gains,
                               const ControllerState& cstate, double dt);

// Task-space PID mapped to the rods via phi = (u_x + u_y, -u_x + u_y).
ControlOutput baseline_pid_step(const Eigen::Vector2d& p_ee, const Eigen::Vector2d& p_ee_dot,
                                const Eigen::Vector2d& p_ee_d, const Gains& gains,
                                const ControllerState& cstate, double dt);

// Baseline PID state whose output at zero error and velocity is `phi` (bumpless start
// from an actuation that is already applied). Axes with zero integral gain keep 0.
ControllerState pid_bumpless_state(const ActuationAngles& phi, const Gains& gains);

ActuationAngles saturate(const ActuationAngles& phi_cmd, const HsaParams& params);

// Physical four-rod layout: which planar side each motor belongs to and its handedness.
struct MotorLayout {
  std::array<int, 4> side{0, 0, 1, 1};
  std::array<int, 4> handedness{1, -1, 1, -1};
};

Eigen::Vector4d motor_map(const ActuationAngles& phi, const MotorLayout& layout = {});

}  // namespace hsa
