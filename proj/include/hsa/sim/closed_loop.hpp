#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hsa/control.hpp"
#include "hsa/dynamics.hpp"
#include "hsa/sim/excitation.hpp"
#include "hsa/sim/trajectory.hpp"

namespace hsa::sim {

enum class ControllerKind { Pid, PSatID, PSatIDGc };

ControllerKind controller_from_string(const std::string& name);  // pid | psatid | psatid-gc
std::string to_string(ControllerKind kind);

// What the controller gets to see.
enum class ObservationMode {
  Exact,         // simulator state
  PosePipeline,  // end-effector pose sampled at pose_rate, q by inverse kinematics,
                 // velocities by a trailing Savitzky-Golay window
};

struct SimConfig {
  double dt_physics{1e-4};   // [s]
  double control_rate{40.0}; // [Hz]
  double duration{0.0};      // [s]; 0 means "as long as the reference/input"
  std::uint64_t seed{0};     // pose-noise seed (pose pipeline only)
  ObservationMode observation{ObservationMode::Exact};
  double pose_rate{200.0};      // [Hz]
  double pose_noise_std{0.0};   // [m] and [rad], pose pipeline only
  double savgol_window{0.1};    // [s]
  int savgol_order{3};
  // Actuation already applied when the run starts (x0 is its response). It is held until
  // the first control update and seeds the baseline PID integral for a bumpless start.
  ActuationAngles initial_phi{ActuationAngles::Zero()};
  // Logging interval [s]; 0 logs at the control rate.
  double log_interval{0.0};

  void validate() const;
  // Physics steps per control period. The period is rounded to a multiple of dt_physics;
  // a warning goes to stderr when the rounding changes it by more than 1e-9 relative.
  int steps_per_control() const;
  int steps_per_log() const;
  int steps_per_pose() const;
};

// One setpoint of a closed-loop reference, active from t_start until the next one.
// `plan` is required by the model-based controllers and ignored by the PID.
struct Setpoint {
  double t_start{0.0};
  Eigen::Vector2d p_ee_d{Eigen::Vector2d::Zero()};
  PlanResult plan;
};

Trajectory closed_loop_sim(const HsaModel& model, const RobotState& x0,
                           const std::vector<Setpoint>& reference, ControllerKind controller,
                           const Gains& gains, const SimConfig& sim);

// Open-loop response to a piecewise-constant actuation signal. The signal is sampled at
// every physics step (its own dt need not match). Duration defaults to the signal length.
Trajectory simulate_open_loop(const HsaModel& model, const RobotState& x0,
                              const PiecewiseConstantSignal& input, const SimConfig& sim);

// Integrates with constant phi from x0 for `duration` seconds and returns the final state.
RobotState integrate_constant_input(const HsaModel& model, const RobotState& x0,
                                    const ActuationAngles& phi, double duration, double dt);

}  // namespace hsa::sim
