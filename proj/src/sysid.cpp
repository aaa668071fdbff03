#include "hsa/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hsa/error.hpp"

namespace hsa {

SysIdDataset extract_steady_states(const sim::Trajectory& traj, double settle_tol) {
  if (!(settle_tol >= 0.0)) throw InvalidArgument("extract_steady_states: settle_tol must be >= 0");
  SysIdDataset out;
  const auto& s = traj.samples();
  std::size_t begin = 0;
  while (begin < s.size()) {
    std::size_t end = begin + 1;
    while (end < s.size() && s[end].phi == s[begin].phi) ++end;
    // Hold [begin, end). The tail starts at 80% of its duration.
    const double t0 = s[begin].t;
    const double t1 = end < s.size() ? s[end].t : s[end - 1].t;
    const double t_tail = t0 + 0.8 * (t1 - t0);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double max_speed = 0.0;
    std::size_t n = 0;
    for (std::size_t k = begin; k < end; ++k) {
      if (s[k].t + 1e-12 < t_tail) continue;
      sum += s[k].state.q.vec();
      max_speed = std::max(max_speed, s[k].state.q_dot.norm());
      ++n;
    }
    if (n > 0 && max_speed < settle_tol) {
      SteadyStateSample sample;
      sample.phi = s[begin].phi;
      sample.q = Configuration::from(sum / static_cast<double>(n));
      sample.max_speed = max_speed;
      sample.t_start = t0;
      sample.t_end = t1;
      out.samples.push_back(sample);
    }
    begin = end;
  }
  if (out.samples.empty()) throw EmptyDatasetError("extract_steady_states: no settled holds");
  return out;
}

ElongationFit regress_elongation(const SysIdDataset& data, const HsaParams& params) {
  if (data.samples.empty()) throw EmptyDatasetError("regress_elongation: empty dataset");
  const auto n = static_cast<Eigen::Index>(data.samples.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::set<double> levels;
  for (Eigen::Index k = 0; k < n; ++k) {
    const SteadyStateSample& s = data.samples[static_cast<std::size_t>(k)];
    const double phi_plus =
        0.5 * (params.geom.handedness[0] * s.phi(0) + params.geom.handedness[1] * s.phi(1));
    X(k, 0) = phi_plus / params.geom.l0;
    X(k, 1) = 1.0;
    y(k) = s.q.sigma_ax;
    levels.insert(phi_plus);
  }
  if (levels.size() < 2) {
    throw IllPosedRegressionError("regress_elongation: need at least two distinct twist levels",
                                  {"c_eps"});
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  ElongationFit fit;
  fit.c_eps = beta(0);
  fit.intercept = beta(1);
  fit.residual_rms = std::sqrt((X * beta - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

const std::vector<std::string>& stiffness_regressor_names() {
  static const std::vector<std::string> names{"S_be_hat", "C_S_be", "S_sh_hat", "C_S_sh",
                                              "S_ax_hat", "C_S_ax", "S_b_sh",
                                              "S_ax_hat*c_eps", "C_S_ax*c_eps"};
  return names;
}

StiffnessFit regress_stiffness(const SysIdDataset& data, const HsaParams& known,
                               const StiffnessFitOptions& opts) {
  if (data.samples.empty()) throw EmptyDatasetError("regress_stiffness: empty dataset");
  const HsaModel model(known);  // validates geometry and masses
  const BackboneGeometry& g = known.geom;
  const Eigen::Vector3d xi0 = known.rest_strain.vec();
  const int p = opts.estimate_c_eps ? 9 : 7;
  const auto rows = static_cast<Eigen::Index>(3 * data.samples.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(rows, p);
  Eigen::VectorXd y(rows);
  double tau_sq = 0.0;

  for (std::size_t k = 0; k < data.samples.size(); ++k) {
    const SteadyStateSample& s = data.samples[k];
    const auto r0 = static_cast<Eigen::Index>(3 * k);
    y.segment<3>(r0) = -model.gravity_vector(s.q);
    for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
      const double tau = g.handedness[i] * s.phi(static_cast<Eigen::Index>(i)) / g.l0;
      tau_sq += tau * tau;
      const Eigen::Vector3d d = rod_strain_jacobian(i, g) * s.q.vec() - xi0;
      // Stress resultant of rod i, one column per unknown, before mapping by J_i^T.
      Eigen::Matrix<double, 3, 9> B = Eigen::Matrix<double, 3, 9>::Zero();
      B(0, 0) = d(0);            // S_be_hat
      B(0, 1) = tau * d(0);      // C_S_be
      B(1, 2) = d(1);            // S_sh_hat
      B(1, 3) = tau * d(1);      // C_S_sh
      B(2, 4) = d(2);            // S_ax_hat
      B(2, 5) = tau * d(2);      // C_S_ax
      B(0, 6) = d(1);            // S_b_sh
      B(1, 6) = d(0);
      if (opts.estimate_c_eps) {
        B(2, 7) = -tau;          // S_ax_hat * c_eps
        B(2, 8) = -tau * tau;    // C_S_ax * c_eps
      } else {
        // Known elongation: -S_ax(phi) eps moves to the regressors of S_ax_hat, C_S_ax.
        const double eps = known.c_eps * tau;
        B(2, 4) -= eps;
        B(2, 5) -= tau * eps;
      }
      const Eigen::Matrix3d JT = rod_strain_jacobian(i, g).transpose();
      X.block(r0, 0, 3, p) += JT * B.leftCols(p);
    }
  }
  tau_sq /= static_cast<double>(2 * data.samples.size());

  // Unit-norm columns, then SVD; empty columns and near-null directions are reported.
  const auto names = stiffness_regressor_names();
  Eigen::VectorXd scale(p);
  std::vector<std::string> unidentifiable;
  for (int j = 0; j < p; ++j) {
    scale(j) = X.col(j).norm();
    if (!(scale(j) > 0.0)) unidentifiable.push_back(names[static_cast<std::size_t>(j)]);
  }
  if (!unidentifiable.empty()) {
    throw IllPosedRegressionError("regress_stiffness: regressors with no excitation", unidentifiable);
  }
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  for (int j = 0; j < p; ++j) {
    if (sv(j) <= opts.rank_tol * sv(0)) {
      const Eigen::VectorXd v = svd.matrixV().col(j);
      for (int c = 0; c < p; ++c) {
        const auto& name = names[static_cast<std::size_t>(c)];
        if (std::abs(v(c)) > 0.1 &&
            std::find(unidentifiable.begin(), unidentifiable.end(), name) == unidentifiable.end()) {
          unidentifiable.push_back(name);
        }
      }
    }
  }
  if (!unidentifiable.empty() || static_cast<Eigen::Index>(rows) < p) {
    throw IllPosedRegressionError("regress_stiffness: rank-deficient regression", unidentifiable);
  }
  const Eigen::VectorXd theta = svd.solve(y).cwiseQuotient(scale);

  StiffnessFit fit;
  fit.stiffness = {theta(0), theta(1), theta(2), theta(3), theta(4), theta(5), theta(6)};
  if (opts.estimate_c_eps) {
    // Least-squares c from [S_ax_hat; C_S_ax tau_rms] c = [P1; P2 tau_rms].
    const double a = theta(4), b = theta(5) * std::sqrt(tau_sq);
    fit.c_eps = (a * theta(7) + b * theta(8) * std::sqrt(tau_sq)) / (a * a + b * b);
  } else {
    fit.c_eps = known.c_eps;
  }
  fit.residual_rms = std::sqrt((X * theta - y).squaredNorm() / static_cast<double>(rows));
  fit.equations = static_cast<int>(rows);
  return fit;
}

double calibrate_rest_strain(const PlanarPose& pose, const HsaParams& params) {
  if (!pose.finite()) throw InvalidArgument("calibrate_rest_strain: non-finite pose");
  const Configuration q = inverse_kinematics(pose, params.geom.l0);
  const HsaModel model(params);
  const Eigen::Vector3d G = model.gravity_vector(q);
  double s_sum = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const double S = model.rod_stiffness(0.0, params.geom.handedness[i]).S_ax;
    s_sum += S;
    weighted += S * (q.sigma_ax + params.geom.rod_offset(i) * q.kappa_be);
  }
  if (!(s_sum > 0.0)) {
    throw CalibrationError("calibrate_rest_strain: no axial stiffness at zero twist");
  }
  const double sigma0 = (weighted + G(2)) / s_sum;
  if (!std::isfinite(sigma0) || sigma0 <= -1.0) {
    throw CalibrationError("calibrate_rest_strain: no admissible rest strain");
  }
  return sigma0;
}

}  // namespace hsa
