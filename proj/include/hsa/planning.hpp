#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hsa/control.hpp"
#include "hsa/dynamics.hpp"
#include "hsa/error.hpp"

namespace hsa {

enum class PlannerMethod { StaticInversion, Rollout };

PlannerMethod planner_method_from_string(const std::string& name);  // static-inversion | rollout
std::string to_string(PlannerMethod method);

struct PlannerOptions {
  PlannerMethod method{PlannerMethod::StaticInversion};
  double t_ss{5.0};          // rollout horizon [s]
  double rollout_dt{1e-3};   // integrator step of the rollout [s]
  double settle_tol{1e-4};   // ||q_dot(t_ss)|| threshold
  int max_iters{100};
  double residual_tol{1e-6}; // [m]
  double lm_damping{1e-3};   // initial Levenberg-Marquardt damping
  double fd_step{1e-6};      // forward-difference step on phi [rad]
  int multistart_count{4};
  double phi_lower{0.0};
  std::optional<double> phi_upper;  // defaults to the material's phi_max
  // First starting point; the multistart grid follows.
  std::optional<ActuationAngles> initial_phi;

  void validate() const;
  double upper(const HsaParams& p) const { return phi_upper.value_or(p.phi_max); }
};

class PlannerNoConvergeError : public Error {
 public:
  PlannerNoConvergeError(const std::string& what, PlanResult best)
      : Error(what), best_(std::move(best)) {}
  const PlanResult& best() const { return best_; }

 private:
  PlanResult best_;
};

// Solves G(q) + K(q - q0) - alpha(q, phi) = 0 for (theta_ee, phi) with q the inverse
// kinematics of (p_ee_d, theta_ee); projected damped Gauss-Newton keeps phi within bounds.
PlanResult static_inversion_plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model,
                                 const PlannerOptions& opts);

// Levenberg-Marquardt on phi -> p_ee after rolling the dynamics out from rest for t_ss.
PlanResult rollout_plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model,
                        const PlannerOptions& opts);

PlanResult plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model, const PlannerOptions& opts);

// Integrates from the unloaded rest configuration at zero velocity with constant phi for
// opts.t_ss. Throws SteadyStateNotReachedError if ||q_dot|| >= opts.settle_tol at the end.
RobotState rollout_to_steady_state(const HsaModel& model, const ActuationAngles& phi,
                                   const PlannerOptions& opts);

// Multistart initial actuation guesses: a ceil(sqrt(n)) x ceil(sqrt(n)) interior grid
// truncated to n points, preceded by opts.initial_phi when set.
std::vector<ActuationAngles> multistart_guesses(const HsaParams& params, const PlannerOptions& opts);

struct WorkspaceGrid {
  int n1{15};
  int n2{15};
  double phi_lower{0.0};
  std::optional<double> phi_upper;  // defaults to phi_max
};

struct WorkspacePoint {
  ActuationAngles phi{ActuationAngles::Zero()};
  bool ok{false};
  Configuration q;
  Eigen::Vector2d p_ee{Eigen::Vector2d::Zero()};
  double mean_phi{0.0};  // mean |phi_i|
  std::string failure;   // empty when ok
};

// Rolls out every grid point to steady state. Failing points are recorded, not thrown.
std::vector<WorkspacePoint> workspace_map(const HsaModel& model, const WorkspaceGrid& grid,
                                          const PlannerOptions& opts);

}  // namespace hsa
