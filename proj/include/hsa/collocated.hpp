#pragma once

#include <Eigen/Dense>

#include "hsa/dynamics.hpp"

namespace hsa {

// Coordinates in which the linearised actuation enters as [I2; 0]. The first two
// entries are the actuated coordinates, the third is the backbone shear strain.
struct CollocatedCoords {
  Eigen::Vector3d theta_c{Eigen::Vector3d::Zero()};

  Eigen::Vector2d actuated() const { return theta_c.head<2>(); }
};

// h(q) for actuation linearised at phi_ss. Rows 1-2 integrate the columns of
// A_phi_ss(q) = d alpha / d phi; row 3 is sigma_sh.
CollocatedCoords collocated_map(const HsaModel& model, const Configuration& q,
                                const ActuationAngles& phi_ss);

// dh/dq. Throws CollocationSingularityError when |det| < 1e-12 times the product of the
// row norms.
Eigen::Matrix3d collocated_jacobian(const HsaModel& model, const Configuration& q,
                                    const ActuationAngles& phi_ss);

// J_h^{-T} G(q).
Eigen::Vector3d collocated_gravity(const HsaModel& model, const Configuration& q,
                                   const ActuationAngles& phi_ss);

// J_h(q) q_dot.
Eigen::Vector3d collocated_velocity(const HsaModel& model, const Configuration& q,
                                    const Eigen::Vector3d& q_dot, const ActuationAngles& phi_ss);

// J_h^{-T} A_phi_ss(q); equals [I2; 0] wherever J_h is invertible.
Eigen::Matrix<double, 3, 2> collocated_input_matrix(const HsaModel& model, const Configuration& q,
                                                    const ActuationAngles& phi_ss);

}  // namespace hsa
