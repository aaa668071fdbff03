#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsa/control.hpp"
#include "hsa/planning.hpp"
#include "hsa/sim/closed_loop.hpp"
#include "hsa/verify.hpp"

namespace hsa::cli {

struct ExcitationConfig {
  std::string kind{"gbn"};  // gbn | step | staircase | constant
  double settling_time{0.5};
  double duration{10.0};
  double hold_time{2.0};
  double dt{0.025};  // resolution of the generated signal [s]
  std::vector<ActuationAngles> levels;  // step: explicit levels
  int staircase_steps{5};               // staircase: 0 -> phi_max in this many levels
  ActuationAngles phi{ActuationAngles::Zero()};  // constant
};

struct ReferenceConfig {
  std::string kind{"eleven-step"};  // eleven-step | waypoints
  int steps{11};
  double hold_time{10.0};
  Eigen::Vector2d x_range{-0.012, 0.012};
  Eigen::Vector2d y_range{0.067, 0.080};
  std::string waypoints_path;  // CSV with header t,x,y
};

struct SysIdConfig {
  std::string trajectory_path;  // empty: simulate a staircase with the material
  double settle_tol{1e-6};
  int grid{4};            // grid x grid twist levels over [0, phi_max]
  double hold_time{2.0};
  double noise{0.0};      // relative multiplicative noise on the settled strains
  bool estimate_c_eps{true};
};

struct ExperimentConfig {
  std::string material{"fpu"};
  std::string controller{"psatid"};
  Gains gains;
  PlannerOptions planner;
  sim::SimConfig sim;
  ExcitationConfig excitation;
  ReferenceConfig reference;
  WorkspaceGrid workspace;
  SysIdConfig sysid;
  VerifyOptions verify;
  std::uint64_t seed{0};
  std::string out_dir{"out"};
  std::optional<Eigen::Vector2d> target;
};

// Parses the JSON experiment schema (comments allowed, unknown keys rejected). Relative
// paths are resolved against base_dir.
ExperimentConfig parse_experiment(std::string_view text, const std::string& base_dir);
ExperimentConfig load_experiment(const std::string& path);

struct Waypoint {
  double t{0.0};
  Eigen::Vector2d p{Eigen::Vector2d::Zero()};
};

// CSV with header "t,x,y"; times strictly increasing, first time 0.
std::vector<Waypoint> read_waypoints_csv(const std::string& path);

// Seeded setpoints drawn uniformly in the reference box, one per hold, each with its
// plan. Candidates the planner rejects are redrawn (up to 200 draws per step).
std::vector<sim::Setpoint> eleven_step_reference(const HsaModel& model, const ReferenceConfig& ref,
                                                 const PlannerOptions& planner, std::uint64_t seed);

// Plans every waypoint; throws PlannerNoConvergeError on the first failure.
std::vector<sim::Setpoint> plan_waypoints(const HsaModel& model, const std::vector<Waypoint>& waypoints,
                                          const PlannerOptions& planner);

}  // namespace hsa::cli
