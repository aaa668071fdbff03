#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "hsa/dynamics.hpp"
#include "hsa/kinematics.hpp"

namespace hsa::sim {

struct TrajectorySample {
  double t{0.0};
  RobotState state;
  ActuationAngles phi{ActuationAngles::Zero()};
  PlanarPose ee;
  // Reference position; NaN for open-loop runs.
  Eigen::Vector2d ref{Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN())};
  // Actuated collocated coordinates seen by a model-based controller; NaN otherwise.
  // Kept in memory only, not part of the CSV schema.
  Eigen::Vector2d theta_c{Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN())};
};

// Time-ordered log with strictly increasing timestamps.
class Trajectory {
 public:
  static const std::vector<std::string>& csv_columns();

  void push_back(TrajectorySample s);
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
  const TrajectorySample& back() const { return samples_.back(); }

  // Sampling interval when uniform (relative spread below 1e-6), otherwise NaN.
  double uniform_dt() const;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  static Trajectory read_csv(std::istream& is);
  static Trajectory read_csv(const std::string& path);

 private:
  std::vector<TrajectorySample> samples_;
};

}  // namespace hsa::sim
