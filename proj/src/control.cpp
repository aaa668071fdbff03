#include "hsa/control.hpp"

#include <cmath>

#include "hsa/collocated.hpp"
#include "hsa/error.hpp"

namespace hsa {

void Gains::validate() const {
  for (const Eigen::Vector2d* g : {&kp, &ki, &kd, &gamma, &kp_pid, &ki_pid, &kd_pid}) {
    if (!g->allFinite() || (g->array() < 0.0).any()) {
      throw ConfigError("gains must be finite and non-negative");
    }
  }
}

namespace {

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("controller: dt must be > 0");
}

// Shared body of both collocated laws; `feedforward` is added to phi_ss.
ControlOutput collocated_law(const HsaModel& model, const RobotState& state, const PlanResult& plan,
                             const Gains& gains, const ControllerState& cstate, double dt,
                             const Eigen::Vector2d& feedforward) {
  check_dt(dt);
  const ActuationAngles& phi_ss = plan.phi_ss;
  const Eigen::Vector2d theta = collocated_map(model, state.q, phi_ss).actuated();
  const Eigen::Vector2d theta_d = collocated_map(model, plan.q_d, phi_ss).actuated();
  const Eigen::Vector2d theta_dot =
      collocated_velocity(model, state.q, state.q_dot, phi_ss).head<2>();
  const Eigen::Vector2d error = theta_d - theta;

  ControllerState next = cstate;
  next.integral.array() +=
      gains.ki.array() * (gains.gamma.array() * error.array()).tanh() * dt;
  next.last_update_time += dt;

  const ActuationAngles phi = phi_ss + feedforward + gains.kp.cwiseProduct(error) -
                              gains.kd.cwiseProduct(theta_dot) + next.integral;
  return {phi, next};
}

}  // namespace

ControlOutput p_sati_d_step(const HsaModel& model, const RobotState& state, const PlanResult& plan,
                            const Gains& gains, const ControllerState& cstate, double dt) {
  return collocated_law(model, state, plan, gains, cstate, dt, Eigen::Vector2d::Zero());
}

ControlOutput p_sati_d_gc_step(const HsaModel& model, const RobotState& state,
                               const PlanResult& plan, const Gains& gains,
                               const ControllerState& cstate, double dt) {
  const Eigen::Vector2d g_now = collocated_gravity(model, state.q, plan.phi_ss).head<2>();
  const Eigen::Vector2d g_des = collocated_gravity(model, plan.q_d, plan.phi_ss).head<2>();
  return collocated_law(model, state, plan, gains, cstate, dt, g_now - g_des);
}

ControlOutput baseline_pid_step(const Eigen::Vector2d& p_ee, const Eigen::Vector2d& p_ee_dot,
                                const Eigen::Vector2d& p_ee_d, const Gains& gains,
                                const ControllerState& cstate, double dt) {
  check_dt(dt);
  const Eigen::Vector2d error = p_ee_d - p_ee;
  ControllerState next = cstate;
  next.integral += error * dt;
  next.last_update_time += dt;
  const Eigen::Vector2d u = gains.kp_pid.cwiseProduct(error) - gains.kd_pid.cwiseProduct(p_ee_dot) +
                            gains.ki_pid.cwiseProduct(next.integral);
  return {ActuationAngles(u.x() + u.y(), -u.x() + u.y()), next};
}

ControllerState pid_bumpless_state(const ActuationAngles& phi, const Gains& gains) {
  // invert phi = (u_x + u_y, -u_x + u_y)
  const Eigen::Vector2d u(0.5 * (phi(0) - phi(1)), 0.5 * (phi(0) + phi(1)));
  ControllerState s;
  for (int i = 0; i < 2; ++i) s.integral(i) = gains.ki_pid(i) > 0.0 ? u(i) / gains.ki_pid(i) : 0.0;
  return s;
}

ActuationAngles saturate(const ActuationAngles& phi_cmd, const HsaParams& params) {
  return phi_cmd.cwiseMax(0.0).cwiseMin(params.phi_max);
}

Eigen::Vector4d motor_map(const ActuationAngles& phi, const MotorLayout& layout) {
  Eigen::Vector4d motors;
  for (int m = 0; m < 4; ++m) {
    const int side = layout.side[m];
    if (side != 0 && side != 1) throw InvalidArgument("motor_map: side index must be 0 or 1");
    motors(m) = layout.handedness[m] * phi(side);
  }
  return motors;
}

}  // namespace hsa
