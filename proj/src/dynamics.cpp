#include "hsa/dynamics.hpp"

#include <cmath>
#include <string>

#include "hsa/arc_functions.hpp"
#include "hsa/error.hpp"

namespace hsa {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

// Position of a material point at arclength s and lateral offset `offset` (local x),
// its Jacobian w.r.t. q and, optionally, the derivatives of that Jacobian.
struct PointKinematics {
  Eigen::Vector2d p;
  Mat23 J;
  std::array<Mat23, 3> dJ;
};

PointKinematics point_kinematics(const Eigen::Vector3d& q, double s, double offset,
                                 bool with_hessian) {
  const double kappa = q(0);
  const double sx = q(1);
  const double sy = 1.0 + q(2);
  const double x = kappa * s;
  const detail::ArcFunctions f = detail::arc_functions(x);
  const double c = std::cos(x), sn = std::sin(x);
  const double s2 = s * s;

  PointKinematics out;
  out.p << s * (f.S * sx - f.C * sy) + offset * c, s * (f.C * sx + f.S * sy) + offset * sn;
  out.J.col(0) << s2 * (f.dS * sx - f.dC * sy) - offset * s * sn,
      s2 * (f.dC * sx + f.dS * sy) + offset * s * c;
  out.J.col(1) << s * f.S, s * f.C;
  out.J.col(2) << -s * f.C, s * f.S;
  if (with_hessian) {
    Mat23& d0 = out.dJ[0];
    d0.col(0) << s2 * s * (f.ddS * sx - f.ddC * sy) - offset * s2 * c,
        s2 * s * (f.ddC * sx + f.ddS * sy) - offset * s2 * sn;
    d0.col(1) << s2 * f.dS, s2 * f.dC;
    d0.col(2) << -s2 * f.dC, s2 * f.dS;
    out.dJ[1].setZero();
    out.dJ[1].col(0) << s2 * f.dS, s2 * f.dC;
    out.dJ[2].setZero();
    out.dJ[2].col(0) << -s2 * f.dC, s2 * f.dS;
  }
  return out;
}

}  // namespace

struct HsaModel::Terms {
  Eigen::Matrix3d M{Eigen::Matrix3d::Zero()};
  std::array<Eigen::Matrix3d, 3> dM{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                    Eigen::Matrix3d::Zero()};
  Eigen::Vector3d G{Eigen::Vector3d::Zero()};
  double U{0.0};
};

HsaModel::HsaModel(HsaParams params) : params_(std::move(params)) {
  params_.validate();
  rule_ = gauss_legendre(params_.quadrature_order, 0.0, params_.geom.l0);
}

HsaModel::Terms HsaModel::evaluate(const Configuration& q, bool with_derivatives) const {
  if (!q.finite()) throw InvalidArgument("dynamics: non-finite configuration");
  const Eigen::Vector3d qv = q.vec();
  const auto& P = params_;
  Terms t;

  auto accumulate = [&](const PointKinematics& pk, double mass) {
    t.M.noalias() += mass * pk.J.transpose() * pk.J;
    t.G.noalias() -= mass * pk.J.transpose() * P.gravity;
    t.U -= mass * P.gravity.dot(pk.p);
    if (with_derivatives) {
      for (int k = 0; k < 3; ++k) {
        const Eigen::Matrix3d a = pk.dJ[k].transpose() * pk.J;
        t.dM[k].noalias() += mass * (a + a.transpose());
      }
    }
  };

  for (std::size_t n = 0; n < rule_.nodes.size(); ++n) {
    const double s = rule_.nodes[n];
    const double w = rule_.weights[n];
    for (std::size_t rod = 0; rod < BackboneGeometry::kNumRods; ++rod) {
      accumulate(point_kinematics(qv, s, P.geom.rod_offset(rod), with_derivatives),
                 w * P.rod_linear_density);
    }
    // cross-section rotation: theta(s) = kappa * s for both rods
    t.M(0, 0) += w * 2.0 * P.rod_rotational_inertia_density * s * s;
  }
  const double l0 = P.geom.l0;
  accumulate(point_kinematics(qv, l0, 0.0, with_derivatives), P.platform_mass);
  t.M(0, 0) += P.platform_inertia * l0 * l0;
  return t;
}

Eigen::Matrix3d HsaModel::inertia_matrix(const Configuration& q) const {
  Eigen::Matrix3d M = evaluate(q, false).M;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
  eig.computeDirect(M, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues()(0) > 0.0)) {
    throw InternalConsistencyError("inertia_matrix: M(q) is not positive definite");
  }
  return M;
}

std::array<Eigen::Matrix3d, 3> HsaModel::inertia_derivatives(const Configuration& q) const {
  return evaluate(q, true).dM;
}

namespace {

// C_kj = sum_i Gamma_kij qd_i with Christoffel symbols of the first kind.
Eigen::Matrix3d christoffel_coriolis(const std::array<Eigen::Matrix3d, 3>& dM,
                                     const Eigen::Vector3d& qd) {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      double c = 0.0;
      for (int i = 0; i < 3; ++i) {
        c += 0.5 * (dM[i](k, j) + dM[j](k, i) - dM[k](i, j)) * qd(i);
      }
      C(k, j) = c;
    }
  }
  return C;
}

}  // namespace

Eigen::Matrix3d HsaModel::coriolis_matrix(const Configuration& q,
                                          const Eigen::Vector3d& q_dot) const {
  return christoffel_coriolis(evaluate(q, true).dM, q_dot);
}

Eigen::Vector3d HsaModel::gravity_vector(const Configuration& q) const {
  return evaluate(q, false).G;
}

double HsaModel::gravitational_potential(const Configuration& q) const {
  return evaluate(q, false).U;
}

RodStiffness HsaModel::rod_stiffness(double phi, int handedness) const {
  const auto& k = params_.stiffness;
  const double twist = handedness * phi / params_.geom.l0;
  return {k.S_be_hat + k.C_S_be * twist, k.S_sh_hat + k.C_S_sh * twist,
          k.S_ax_hat + k.C_S_ax * twist};
}

Eigen::Matrix3d HsaModel::rod_stiffness_matrix(double phi, int handedness) const {
  const RodStiffness s = rod_stiffness(phi, handedness);
  Eigen::Matrix3d S;
  S << s.S_be, params_.stiffness.S_b_sh, 0.0,  //
      params_.stiffness.S_b_sh, s.S_sh, 0.0,   //
      0.0, 0.0, s.S_ax;
  return S;
}

Eigen::Vector3d HsaModel::elastic_force(const Configuration& q, const ActuationAngles& phi) const {
  const auto& geom = params_.geom;
  const Eigen::Vector3d qv = q.vec();
  const Eigen::Vector3d xi0 = params_.rest_strain.vec();
  Eigen::Vector3d f = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const Eigen::Matrix3d J = rod_strain_jacobian(i, geom);
    Eigen::Vector3d strain = J * qv - xi0;
    strain(2) -= elongation(phi(i), geom.handedness[i], params_.c_eps, geom.l0);
    f.noalias() += J.transpose() * (rod_stiffness_matrix(phi(i), geom.handedness[i]) * strain);
  }
  return f;
}

double HsaModel::elastic_potential(const Configuration& q, const ActuationAngles& phi) const {
  const auto& geom = params_.geom;
  const Eigen::Vector3d qv = q.vec();
  const Eigen::Vector3d xi0 = params_.rest_strain.vec();
  double v = 0.0;
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const Eigen::Matrix3d J = rod_strain_jacobian(i, geom);
    Eigen::Vector3d strain = J * qv - xi0;
    strain(2) -= elongation(phi(i), geom.handedness[i], params_.c_eps, geom.l0);
    v += 0.5 * strain.dot(rod_stiffness_matrix(phi(i), geom.handedness[i]) * strain);
  }
  return v;
}

ElasticSplit HsaModel::elastic_and_actuation(const Configuration& q,
                                             const ActuationAngles& phi) const {
  const auto& geom = params_.geom;
  const auto& k = params_.stiffness;
  const Eigen::Vector3d qv = q.vec();
  const Eigen::Vector3d xi0 = params_.rest_strain.vec();
  ElasticSplit out{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const int h = geom.handedness[i];
    const Eigen::Matrix3d J = rod_strain_jacobian(i, geom);
    const Eigen::Vector3d strain = J * qv - xi0;
    out.k_force.noalias() += J.transpose() * (rod_stiffness_matrix(0.0, h) * strain);

    // alpha_i = J^T [ S(phi) eps e3 - (S(phi) - S(0)) (J q - xi0) ]
    const double twist = h * phi(i) / geom.l0;
    const double eps = elongation(phi(i), h, params_.c_eps, geom.l0);
    const RodStiffness s = rod_stiffness(phi(i), h);
    Eigen::Vector3d tau;
    tau << -k.C_S_be * twist * strain(0), -k.C_S_sh * twist * strain(1),
        s.S_ax * eps - k.C_S_ax * twist * strain(2);
    out.alpha.noalias() += J.transpose() * tau;
  }
  return out;
}

Eigen::Matrix3d HsaModel::stiffness_matrix(const ActuationAngles& phi) const {
  const auto& geom = params_.geom;
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const Eigen::Matrix3d J = rod_strain_jacobian(i, geom);
    K.noalias() += J.transpose() * rod_stiffness_matrix(phi(i), geom.handedness[i]) * J;
  }
  return K;
}

Configuration HsaModel::rest_configuration() const {
  // Start from the shared rod rest strain and correct along the range of K; directions
  // with zero stiffness keep the rest strain value.
  const Eigen::Vector3d xi0 = params_.rest_strain.vec();
  const Configuration c0 = params_.rest_strain;
  const Eigen::Vector3d residual = elastic_and_actuation(c0, ActuationAngles::Zero()).k_force;
  const Eigen::Matrix3d K = stiffness_matrix(ActuationAngles::Zero());
  const Eigen::Vector3d delta = K.completeOrthogonalDecomposition().solve(-residual);
  return Configuration::from(xi0 + delta);
}

Eigen::Matrix<double, 3, 2> HsaModel::actuation_jacobian(const Configuration& q,
                                                         const ActuationAngles& phi_ss) const {
  const auto& geom = params_.geom;
  const auto& k = params_.stiffness;
  const Eigen::Vector3d qv = q.vec();
  const Eigen::Vector3d xi0 = params_.rest_strain.vec();
  Eigen::Matrix<double, 3, 2> A;
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const int h = geom.handedness[i];
    const Eigen::Matrix3d J = rod_strain_jacobian(i, geom);
    const Eigen::Vector3d strain = J * qv - xi0;
    const double eps = elongation(phi_ss(i), h, params_.c_eps, geom.l0);
    const double scale = h / geom.l0;
    Eigen::Vector3d v;
    v << -k.C_S_be * strain(0), -k.C_S_sh * strain(1),
        k.S_ax_hat * params_.c_eps + 2.0 * k.C_S_ax * eps - k.C_S_ax * strain(2);
    A.col(i) = scale * (J.transpose() * v);
  }
  return A;
}

Eigen::Matrix3d HsaModel::damping_matrix() const {
  const double r = params_.geom.r_off;
  const auto& d = params_.damping;
  return 2.0 * Eigen::Vector3d(d.zeta_be + r * r * d.zeta_ax, d.zeta_sh, d.zeta_ax).asDiagonal();
}

Eigen::Vector3d HsaModel::static_residual(const Configuration& q,
                                          const ActuationAngles& phi) const {
  const ElasticSplit e = elastic_and_actuation(q, phi);
  return gravity_vector(q) + e.k_force - e.alpha;
}

StateRate HsaModel::forward_dynamics(const RobotState& state, const ActuationAngles& phi) const {
  return forward_dynamics(state, phi, damping_matrix());
}

StateRate HsaModel::forward_dynamics(const RobotState& state, const ActuationAngles& phi,
                                     const Eigen::Matrix3d& damping) const {
  if (!state.q_dot.allFinite() || !phi.allFinite()) {
    throw InvalidArgument("forward_dynamics: non-finite state or input");
  }
  const Terms t = evaluate(state.q, true);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
  eig.computeDirect(t.M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw SingularDynamicsError("forward_dynamics: inertia matrix is near-singular",
                                lo > 0.0 ? hi / lo : INFINITY);
  }
  const Eigen::Matrix3d C = christoffel_coriolis(t.dM, state.q_dot);
  const ElasticSplit e = elastic_and_actuation(state.q, phi);
  const Eigen::Vector3d rhs =
      e.alpha - C * state.q_dot - t.G - e.k_force - damping * state.q_dot;
  return {state.q_dot, t.M.llt().solve(rhs)};
}

EnergyBreakdown HsaModel::energy(const RobotState& state, const ActuationAngles& phi) const {
  const Terms t = evaluate(state.q, false);
  return {0.5 * state.q_dot.dot(t.M * state.q_dot), t.U, elastic_potential(state.q, phi)};
}

}  // namespace hsa
