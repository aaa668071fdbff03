#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>

namespace hsa {

// Strains of the virtual backbone, measured relative to the straight, unit-stretch
// rest shape: the kinematic axial stretch is 1 + sigma_ax.
struct Configuration {
  double kappa_be{0.0};  // bending strain [rad/m]
  double sigma_sh{0.0};  // shear strain [-]
  double sigma_ax{0.0};  // axial strain [-]

  Eigen::Vector3d vec() const { return {kappa_be, sigma_sh, sigma_ax}; }
  static Configuration from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
  bool finite() const;
};

// SE(2) pose of a backbone point. Orientation is measured from the base frame,
// whose y axis points along the undeformed backbone.
struct PlanarPose {
  double p_x{0.0};
  double p_y{0.0};
  double theta{0.0};

  Eigen::Vector2d position() const { return {p_x, p_y}; }
  Eigen::Vector3d vec() const { return {p_x, p_y, theta}; }
  bool finite() const;
};

// Two-rod planar layout. Rod k sits at local lateral offset offset_sign[k] * r_off.
struct BackboneGeometry {
  double l0{0.059};   // printed rod length [m]
  double r_off{0.024};  // rod centerline offset from the virtual backbone [m]
  std::array<int, 2> handedness{1, 1};
  std::array<int, 2> offset_sign{-1, 1};

  static constexpr std::size_t kNumRods = 2;

  // Signed lateral offset of rod `rod` (0-based).
  double rod_offset(std::size_t rod) const;
  void validate() const;
};

// Pose of the backbone point at arclength s in [0, l0].
PlanarPose forward_kinematics(const Configuration& q, double s, const BackboneGeometry& geom);

// Distal (end-effector) pose, i.e. forward_kinematics at s = l0.
PlanarPose end_effector_pose(const Configuration& q, const BackboneGeometry& geom);

// d(end_effector_pose)/dq; rows follow PlanarPose::vec().
Eigen::Matrix3d end_effector_jacobian(const Configuration& q, const BackboneGeometry& geom);

// Closed-form inverse of forward_kinematics for a pose observed at arclength s > 0.
Configuration inverse_kinematics(const PlanarPose& chi, double s);

// Strain of physical rod `rod`: (kappa, sigma_sh, sigma_ax + offset * kappa).
Configuration rod_strains(const Configuration& q, std::size_t rod, const BackboneGeometry& geom);

// d(rod_strains)/dq. Identity except entry (2, 0) which is the signed rod offset.
Eigen::Matrix3d rod_strain_jacobian(std::size_t rod, const BackboneGeometry& geom);

// Twist-induced elongation strain eps = C_eps * (handedness * phi) / l0.
double elongation(double phi, int handedness, double c_eps, double l0);

}  // namespace hsa
