#include "hsa/collocated.hpp"

#include <cmath>

#include "hsa/error.hpp"

namespace hsa {

CollocatedCoords collocated_map(const HsaModel& model, const Configuration& q,
                                const ActuationAngles& phi_ss) {
  const HsaParams& p = model.params();
  const auto& k = p.stiffness;
  const double r = p.geom.r_off;
  const double kappa = q.kappa_be, sh = q.sigma_sh, ax = q.sigma_ax;
  const double kappa0 = p.rest_strain.kappa_be;
  const double sh0 = p.rest_strain.sigma_sh;
  const double ax0 = p.rest_strain.sigma_ax;

  CollocatedCoords out;
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    // `chirality` is the rod handedness; h_i below is the map component.
    const int chirality = p.geom.handedness[i];
    const double ri = p.geom.rod_offset(i);
    const double eps = elongation(phi_ss(i), chirality, p.c_eps, p.geom.l0);
    const double axial = 2.0 * eps * (ri * kappa + ax) - 0.5 * r * r * kappa * kappa +
                         ri * ax0 * kappa - ri * kappa * ax + ax0 * ax - 0.5 * ax * ax;
    const double bending = kappa0 * kappa - 0.5 * kappa * kappa;
    const double shear = sh0 * sh - 0.5 * sh * sh;
    const double preload = k.S_ax_hat * p.c_eps * (ri * kappa + ax);
    out.theta_c(i) = chirality / p.geom.l0 *
                     (k.C_S_ax * axial + k.C_S_be * bending + k.C_S_sh * shear + preload);
  }
  out.theta_c(2) = sh;
  return out;
}

Eigen::Matrix3d collocated_jacobian(const HsaModel& model, const Configuration& q,
                                    const ActuationAngles& phi_ss) {
  const Eigen::Matrix<double, 3, 2> A = model.actuation_jacobian(q, phi_ss);
  Eigen::Matrix3d Jh;
  Jh.row(0) = A.col(0).transpose();
  Jh.row(1) = A.col(1).transpose();
  Jh.row(2) << 0.0, 1.0, 0.0;
  const double det = Jh.determinant();
  const double scale = Jh.row(0).norm() * Jh.row(1).norm() * Jh.row(2).norm();
  if (!(scale > 0.0) || !(std::abs(det) >= 1e-12 * scale) || !std::isfinite(det)) {
    throw CollocationSingularityError("collocated_jacobian: J_h is singular", det);
  }
  return Jh;
}

Eigen::Vector3d collocated_gravity(const HsaModel& model, const Configuration& q,
                                   const ActuationAngles& phi_ss) {
  const Eigen::Matrix3d Jh = collocated_jacobian(model, q, phi_ss);
  return Jh.transpose().partialPivLu().solve(model.gravity_vector(q));
}

Eigen::Vector3d collocated_velocity(const HsaModel& model, const Configuration& q,
                                    const Eigen::Vector3d& q_dot, const ActuationAngles& phi_ss) {
  return collocated_jacobian(model, q, phi_ss) * q_dot;
}

Eigen::Matrix<double, 3, 2> collocated_input_matrix(const HsaModel& model, const Configuration& q,
                                                    const ActuationAngles& phi_ss) {
  const Eigen::Matrix3d Jh = collocated_jacobian(model, q, phi_ss);
  return Jh.transpose().partialPivLu().solve(model.actuation_jacobian(q, phi_ss));
}

}  // namespace hsa
