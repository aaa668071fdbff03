#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hsa/sim/trajectory.hpp"

namespace hsa::sim {

// sqrt(sum_k ||p_d(k) - p(k)||^2 / n).
double rmse(const std::vector<Eigen::Vector2d>& reference,
            const std::vector<Eigen::Vector2d>& actual);

// RMSE over the logged samples of a closed-loop trajectory (samples with NaN reference
// are skipped).
double trajectory_rmse(const Trajectory& traj);

struct StepMetrics {
  double t_start{0.0};
  double t_end{0.0};
  Eigen::Vector2d target{Eigen::Vector2d::Zero()};
  double initial_error{0.0};  // ||p_d - p|| at the first sample of the step [m]
  double final_error{0.0};    // at the last sample of the step [m]
  // First time (relative to t_start) the error falls below 10% of initial_error; NaN if
  // it never does.
  double time_to_90{0.0};
  // Time (relative to t_start) after which the error stays below the threshold until the
  // end of the step; NaN if it is above the threshold at the end.
  double settle_time{0.0};
};

// Splits the trajectory at the given step start times (the first must be <= the first
// sample time) and evaluates each segment.
std::vector<StepMetrics> step_metrics(const Trajectory& traj, const std::vector<double>& step_times,
                                      double settle_threshold);

}  // namespace hsa::sim
