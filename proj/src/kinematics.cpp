#include "hsa/kinematics.hpp"

#include <cmath>
#include <string>

#include "hsa/arc_functions.hpp"
#include "hsa/error.hpp"

namespace hsa {

namespace {

// Below this |kappa * s| the trigonometric quotients switch to truncated series.
constexpr double kSeriesThreshold = 1e-6;

// sin(x)/x and (1 - cos(x))/x
void arc_quotients(double x, double& sinc, double& cosc) {
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    cosc = x * (0.5 - x2 / 24.0 + x2 * x2 / 720.0);
    return;
  }
  sinc = std::sin(x) / x;
  const double half = std::sin(0.5 * x);
  cosc = 2.0 * half * half / x;
}

// (theta/2) * cot(theta/2), smooth through theta = 0.
double half_angle_cot(double theta) {
  if (std::abs(theta) < kSeriesThreshold) {
    const double t2 = theta * theta;
    return 1.0 - t2 / 12.0 - t2 * t2 / 720.0;
  }
  const double half = 0.5 * theta;
  const double sh = std::sin(half);
  if (sh == 0.0) {
    throw InvalidArgument("inverse_kinematics: orientation is a full turn, pose is not invertible");
  }
  return half * std::cos(half) / sh;
}

}  // namespace

bool Configuration::finite() const {
  return std::isfinite(kappa_be) && std::isfinite(sigma_sh) && std::isfinite(sigma_ax);
}

bool PlanarPose::finite() const {
  return std::isfinite(p_x) && std::isfinite(p_y) && std::isfinite(theta);
}

double BackboneGeometry::rod_offset(std::size_t rod) const {
  if (rod >= kNumRods) {
    throw InvalidArgument("rod index " + std::to_string(rod) + " out of range");
  }
  return offset_sign[rod] * r_off;
}

void BackboneGeometry::validate() const {
  if (!(l0 > 0.0) || !std::isfinite(l0)) throw ConfigError("geometry: l0 must be positive");
  if (!(r_off >= 0.0) || !std::isfinite(r_off)) {
    throw ConfigError("geometry: r_off must be non-negative");
  }
  for (std::size_t i = 0; i < kNumRods; ++i) {
    if (handedness[i] != 1 && handedness[i] != -1) {
      throw ConfigError("geometry: handedness entries must be +1 or -1");
    }
    if (offset_sign[i] != 1 && offset_sign[i] != -1) {
      throw ConfigError("geometry: rod offset signs must be +1 or -1");
    }
  }
  if (offset_sign[0] == offset_sign[1]) {
    throw ConfigError("geometry: the two rods must sit on opposite sides of the backbone");
  }
}

PlanarPose forward_kinematics(const Configuration& q, double s, const BackboneGeometry& geom) {
  if (!q.finite() || !std::isfinite(s)) {
    throw InvalidArgument("forward_kinematics: non-finite input");
  }
  if (s < 0.0 || s > geom.l0) {
    throw InvalidArgument("forward_kinematics: arclength outside [0, l0]");
  }
  const double x = q.kappa_be * s;
  double sinc = 0.0, cosc = 0.0;
  arc_quotients(x, sinc, cosc);
  const double shear = q.sigma_sh;
  const double stretch = 1.0 + q.sigma_ax;
  return {s * (shear * sinc - stretch * cosc), s * (shear * cosc + stretch * sinc), x};
}

PlanarPose end_effector_pose(const Configuration& q, const BackboneGeometry& geom) {
  return forward_kinematics(q, geom.l0, geom);
}

Eigen::Matrix3d end_effector_jacobian(const Configuration& q, const BackboneGeometry& geom) {
  if (!q.finite()) throw InvalidArgument("end_effector_jacobian: non-finite input");
  const double s = geom.l0;
  const detail::ArcFunctions a = detail::arc_functions(q.kappa_be * s);
  const double shear = q.sigma_sh;
  const double stretch = 1.0 + q.sigma_ax;
  Eigen::Matrix3d j;
  j << s * s * (shear * a.dS - stretch * a.dC), s * a.S, -s * a.C,
       s * s * (shear * a.dC + stretch * a.dS), s * a.C, s * a.S,
       s, 0.0, 0.0;
  return j;
}

Configuration inverse_kinematics(const PlanarPose& chi, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InvalidArgument("inverse_kinematics: arclength must be positive");
  }
  if (!chi.finite()) throw InvalidArgument("inverse_kinematics: non-finite pose");
  const double f = half_angle_cot(chi.theta);
  const double half = 0.5 * chi.theta;
  const double shear = (half * chi.p_y + f * chi.p_x) / s;
  const double stretch = (-half * chi.p_x + f * chi.p_y) / s;
  return {chi.theta / s, shear, stretch - 1.0};
}

Configuration rod_strains(const Configuration& q, std::size_t rod, const BackboneGeometry& geom) {
  const double offset = geom.rod_offset(rod);
  return {q.kappa_be, q.sigma_sh, q.sigma_ax + offset * q.kappa_be};
}

Eigen::Matrix3d rod_strain_jacobian(std::size_t rod, const BackboneGeometry& geom) {
  Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
  j(2, 0) = geom.rod_offset(rod);
  return j;
}

double elongation(double phi, int handedness, double c_eps, double l0) {
  return c_eps * (handedness * phi) / l0;
}

}  // namespace hsa
