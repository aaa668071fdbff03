#pragma once

#include <Eigen/Dense>
#include <array>

#include "hsa/kinematics.hpp"
#include "hsa/params.hpp"
#include "hsa/quadrature.hpp"

namespace hsa {

// Planar rod twist angles [rad], one per rod of the planar model.
using ActuationAngles = Eigen::Vector2d;

struct RobotState {
  Configuration q;
  Eigen::Vector3d q_dot{Eigen::Vector3d::Zero()};
};

struct StateRate {
  Eigen::Vector3d q_dot;
  Eigen::Vector3d q_ddot;
};

struct RodStiffness {
  double S_be;
  double S_sh;
  double S_ax;
};

// Elastic generalized force split as it appears in the equations of motion:
//   M q'' + C q' + G + k_force + D q' = alpha
// k_force = K (q - q0) collects everything independent of the twist angles.
struct ElasticSplit {
  Eigen::Vector3d k_force;
  Eigen::Vector3d alpha;
};

struct EnergyBreakdown {
  double kinetic;
  double gravitational;
  double elastic;
  double total() const { return kinetic + gravitational + elastic; }
};

// Euler-Lagrange model of the two-rod planar HSA robot. Immutable after construction;
// shares nothing mutable, so one instance may be used from many threads.
class HsaModel {
 public:
  explicit HsaModel(HsaParams params);

  const HsaParams& params() const { return params_; }
  const BackboneGeometry& geom() const { return params_.geom; }
  const QuadratureRule& quadrature() const { return rule_; }

  Eigen::Matrix3d inertia_matrix(const Configuration& q) const;
  // dM/dq_k for k = 0..2, differentiated analytically through the quadrature.
  std::array<Eigen::Matrix3d, 3> inertia_derivatives(const Configuration& q) const;
  Eigen::Matrix3d coriolis_matrix(const Configuration& q, const Eigen::Vector3d& q_dot) const;
  Eigen::Vector3d gravity_vector(const Configuration& q) const;
  double gravitational_potential(const Configuration& q) const;

  RodStiffness rod_stiffness(double phi, int handedness) const;
  // Per-rod constitutive matrix of the stress resultants.
  Eigen::Matrix3d rod_stiffness_matrix(double phi, int handedness) const;
  ElasticSplit elastic_and_actuation(const Configuration& q, const ActuationAngles& phi) const;
  // Sum_i J_i^T tau_K,i evaluated directly from the rod law.
  Eigen::Vector3d elastic_force(const Configuration& q, const ActuationAngles& phi) const;
  double elastic_potential(const Configuration& q, const ActuationAngles& phi) const;
  // Hessian of the elastic potential at fixed phi: sum_i J_i^T S_i(phi) J_i.
  Eigen::Matrix3d stiffness_matrix(const ActuationAngles& phi) const;
  // q0 with K (q - q0) = sum_i J_i^T S_i(0) (J_i q - xi0).
  Configuration rest_configuration() const;

  Eigen::Matrix<double, 3, 2> actuation_jacobian(const Configuration& q,
                                                 const ActuationAngles& phi_ss) const;
  Eigen::Matrix3d damping_matrix() const;

  // Static residual G(q) + K (q - q0) - alpha(q, phi); zero at an equilibrium.
  Eigen::Vector3d static_residual(const Configuration& q, const ActuationAngles& phi) const;

  StateRate forward_dynamics(const RobotState& state, const ActuationAngles& phi) const;
  // Same, with the damping matrix replaced by `damping` (tests, energy audits).
  StateRate forward_dynamics(const RobotState& state, const ActuationAngles& phi,
                             const Eigen::Matrix3d& damping) const;

  EnergyBreakdown energy(const RobotState& state, const ActuationAngles& phi) const;
  double total_energy(const RobotState& state, const ActuationAngles& phi) const {
    return energy(state, phi).total();
  }

 private:
  struct Terms;
  Terms evaluate(const Configuration& q, bool with_derivatives) const;

  HsaParams params_;
  QuadratureRule rule_;
};

}  // namespace hsa
