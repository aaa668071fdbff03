#include "hsa/planning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "hsa/sim/closed_loop.hpp"

namespace hsa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Orientation bound used to keep the inverse kinematics away from a full turn.
constexpr double kThetaBound = 3.0;

struct Box {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd project(const Eigen::VectorXd& z) const { return z.cwiseMax(lo).cwiseMin(hi); }
};

using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOutcome {
  Eigen::VectorXd z;
  Eigen::VectorXd r;
  int iterations{0};
};

// Residual evaluation that maps model failures to an infinite cost.
bool try_eval(const Residual& f, const Eigen::VectorXd& z, Eigen::VectorXd& out) {
  try {
    out = f(z);
    return out.allFinite();
  } catch (const Error&) {
    return false;
  }
}

Eigen::MatrixXd fd_jacobian(const Residual& f, const Eigen::VectorXd& z, const Eigen::VectorXd& r,
                            const Box& box, const Eigen::VectorXd& steps, bool central) {
  Eigen::MatrixXd J(r.size(), z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double h = steps(j);
    Eigen::VectorXd zp = z, zm = z, rp, rm;
    if (central) {
      zp(j) += h;
      zm(j) -= h;
      if (!try_eval(f, zp, rp) || !try_eval(f, zm, rm)) {
        throw InternalConsistencyError("planner: residual failed next to an accepted iterate");
      }
      J.col(j) = (rp - rm) / (2.0 * h);
    } else {
      // Forward difference, stepping inwards at the upper bound.
      const double hs = z(j) + h > box.hi(j) ? -h : h;
      zp(j) += hs;
      if (!try_eval(f, zp, rp)) {
        throw InternalConsistencyError("planner: residual failed next to an accepted iterate");
      }
      J.col(j) = (rp - r) / hs;
    }
  }
  return J;
}

// Projected Levenberg-Marquardt with multiplicative damping updates. With stop_at_tol
// the loop ends as soon as ||r|| <= tol; otherwise it keeps refining until the cost stops
// decreasing.
LmOutcome projected_lm(const Residual& f, Eigen::VectorXd z, const Box& box,
                       const Eigen::VectorXd& fd_steps, bool central, double lambda0,
                       int max_iters, double tol, bool stop_at_tol) {
  z = box.project(z);
  Eigen::VectorXd r;
  if (!try_eval(f, z, r)) return {z, Eigen::VectorXd::Constant(1, kInf), 0};
  double cost = r.squaredNorm();
  double lambda = lambda0;
  int it = 0;
  while (it < max_iters) {
    if (stop_at_tol && std::sqrt(cost) <= tol) break;
    const Eigen::MatrixXd J = fd_jacobian(f, z, r, box, fd_steps, central);
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd h_diag = H.diagonal().cwiseMax(1e-12 * std::max(1.0, H.diagonal().maxCoeff()));
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * h_diag;
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd zn = box.project(z + step);
      if ((zn - z).norm() <= 1e-15 * (1.0 + z.norm())) break;
      Eigen::VectorXd rn;
      if (try_eval(f, zn, rn) && rn.squaredNorm() < cost) {
        z = zn;
        r = rn;
        cost = rn.squaredNorm();
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
    ++it;
  }
  return {z, r, it};
}

Eigen::Matrix3d residual_weights(const HsaModel& model, double phi_upper) {
  const double l0 = model.geom().l0;
  const Eigen::Matrix3d K = model.stiffness_matrix(ActuationAngles::Constant(0.5 * phi_upper));
  Eigen::Vector3d w(0.5 * l0 * l0, l0, l0);
  for (int i = 0; i < 3; ++i) w(i) /= std::max(std::abs(K(i, i)), 1e-12);
  return w.asDiagonal();
}

void check_target(const Eigen::Vector2d& p) {
  if (!p.allFinite()) throw InvalidArgument("planner: target must be finite");
}

}  // namespace

PlannerMethod planner_method_from_string(const std::string& name) {
  if (name == "static-inversion" || name == "static_inversion") return PlannerMethod::StaticInversion;
  if (name == "rollout") return PlannerMethod::Rollout;
  throw ConfigError("unknown planner method '" + name + "' (expected static-inversion or rollout)");
}

std::string to_string(PlannerMethod method) {
  return method == PlannerMethod::Rollout ? "rollout" : "static-inversion";
}

void PlannerOptions::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(t_ss)) throw ConfigError("planner: t_ss must be > 0");
  if (!positive(rollout_dt)) throw ConfigError("planner: rollout_dt must be > 0");
  if (!positive(settle_tol)) throw ConfigError("planner: settle_tol must be > 0");
  if (!positive(residual_tol)) throw ConfigError("planner: residual_tol must be > 0");
  if (!positive(lm_damping)) throw ConfigError("planner: lm_damping must be > 0");
  if (!positive(fd_step)) throw ConfigError("planner: fd_step must be > 0");
  if (max_iters < 1) throw ConfigError("planner: max_iters must be >= 1");
  if (multistart_count < 1) throw ConfigError("planner: multistart_count must be >= 1");
  if (!(phi_lower >= 0.0)) throw ConfigError("planner: phi_lower must be >= 0");
  if (phi_upper && !(*phi_upper > phi_lower)) throw ConfigError("planner: phi_upper must exceed phi_lower");
  if (initial_phi && !initial_phi->allFinite()) throw ConfigError("planner: initial_phi must be finite");
}

std::vector<ActuationAngles> multistart_guesses(const HsaParams& params, const PlannerOptions& opts) {
  std::vector<ActuationAngles> out;
  if (opts.initial_phi) out.push_back(*opts.initial_phi);
  const double lo = opts.phi_lower, hi = opts.upper(params);
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(opts.multistart_count))));
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      if (static_cast<int>(out.size()) >= opts.multistart_count + (opts.initial_phi ? 1 : 0)) break;
      const double fa = (a + 0.5) / side, fb = (b + 0.5) / side;
      out.emplace_back(lo + fa * (hi - lo), lo + fb * (hi - lo));
    }
  }
  return out;
}

PlanResult static_inversion_plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model,
                                 const PlannerOptions& opts) {
  opts.validate();
  check_target(p_ee_d);
  const HsaParams& params = model.params();
  const double l0 = params.geom.l0;
  const double hi = opts.upper(params);
  const Eigen::Matrix3d W = residual_weights(model, hi);

  const Residual f = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Configuration q = inverse_kinematics({p_ee_d.x(), p_ee_d.y(), z(0)}, l0);
    return W * model.static_residual(q, ActuationAngles(z(1), z(2)));
  };
  Box box{Eigen::Vector3d(-kThetaBound, opts.phi_lower, opts.phi_lower),
          Eigen::Vector3d(kThetaBound, hi, hi)};
  const double theta0 = 2.0 * std::atan2(-p_ee_d.x(), p_ee_d.y());

  PlanResult best;
  best.residual = kInf;
  for (const ActuationAngles& phi0 : multistart_guesses(params, opts)) {
    const Eigen::Vector3d z0(std::clamp(theta0, -kThetaBound, kThetaBound), phi0(0), phi0(1));
    const LmOutcome o = projected_lm(f, z0, box, Eigen::Vector3d::Constant(1e-7), true,
                                     opts.lm_damping, opts.max_iters, opts.residual_tol, false);
    const double res = o.r.norm();
    if (res < best.residual) {
      best.chi_ee_d = PlanarPose{p_ee_d.x(), p_ee_d.y(), o.z(0)};
      best.q_d = inverse_kinematics(best.chi_ee_d, l0);
      best.phi_ss = ActuationAngles(o.z(1), o.z(2));
      best.residual = res;
      best.iterations = o.iterations;
    }
  }
  if (!(best.residual <= opts.residual_tol)) {
    throw PlannerNoConvergeError("static_inversion_plan: residual " + std::to_string(best.residual) +
                                     " m above tolerance",
                                 best);
  }
  return best;
}

RobotState rollout_to_steady_state(const HsaModel& model, const ActuationAngles& phi,
                                   const PlannerOptions& opts) {
  const RobotState rest{model.rest_configuration(), Eigen::Vector3d::Zero()};
  const RobotState end = sim::integrate_constant_input(model, rest, phi, opts.t_ss, opts.rollout_dt);
  const double v = end.q_dot.norm();
  if (!(v < opts.settle_tol)) {
    throw SteadyStateNotReachedError("rollout did not settle: ||q_dot|| = " + std::to_string(v), v);
  }
  return end;
}

PlanResult rollout_plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model,
                        const PlannerOptions& opts) {
  opts.validate();
  check_target(p_ee_d);
  const HsaParams& params = model.params();
  const double hi = opts.upper(params);

  const Residual f = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const RobotState ss = rollout_to_steady_state(model, ActuationAngles(z(0), z(1)), opts);
    return end_effector_pose(ss.q, params.geom).position() - p_ee_d;
  };
  Box box{Eigen::Vector2d::Constant(opts.phi_lower), Eigen::Vector2d::Constant(hi)};

  PlanResult best;
  best.residual = kInf;
  // Starts run in order and stop at the first converged one; otherwise the lowest
  // residual wins, earliest start on ties.
  for (const ActuationAngles& phi0 : multistart_guesses(params, opts)) {
    const LmOutcome o = projected_lm(f, phi0, box, Eigen::Vector2d::Constant(opts.fd_step), false,
                                     opts.lm_damping, opts.max_iters, opts.residual_tol, true);
    const double res = o.r.norm();
    if (res < best.residual) {
      best.phi_ss = ActuationAngles(o.z(0), o.z(1));
      best.q_d = rollout_to_steady_state(model, best.phi_ss, opts).q;
      best.chi_ee_d = end_effector_pose(best.q_d, params.geom);
      best.residual = res;
      best.iterations = o.iterations;
    }
    if (best.residual <= opts.residual_tol) break;
  }
  if (!(best.residual <= opts.residual_tol)) {
    throw PlannerNoConvergeError("rollout_plan: residual " + std::to_string(best.residual) +
                                     " m above tolerance",
                                 best);
  }
  return best;
}

PlanResult plan(const Eigen::Vector2d& p_ee_d, const HsaModel& model, const PlannerOptions& opts) {
  return opts.method == PlannerMethod::Rollout ? rollout_plan(p_ee_d, model, opts)
                                               : static_inversion_plan(p_ee_d, model, opts);
}

std::vector<WorkspacePoint> workspace_map(const HsaModel& model, const WorkspaceGrid& grid,
                                          const PlannerOptions& opts) {
  opts.validate();
  const double hi = grid.phi_upper.value_or(model.params().phi_max);
  if (grid.n1 < 1 || grid.n2 < 1) throw InvalidArgument("workspace_map: grid must be non-empty");
  if (!(grid.phi_lower >= 0.0) || !(hi >= grid.phi_lower) || hi > model.params().phi_max) {
    throw InvalidArgument("workspace_map: grid must lie within [0, phi_max]");
  }
  auto level = [&](int i, int n) {
    return n == 1 ? grid.phi_lower : grid.phi_lower + (hi - grid.phi_lower) * i / (n - 1);
  };
  std::vector<WorkspacePoint> out;
  out.reserve(static_cast<std::size_t>(grid.n1 * grid.n2));
  for (int i = 0; i < grid.n1; ++i) {
    for (int j = 0; j < grid.n2; ++j) {
      WorkspacePoint p;
      p.phi = ActuationAngles(level(i, grid.n1), level(j, grid.n2));
      p.mean_phi = p.phi.cwiseAbs().mean();
      try {
        const RobotState ss = rollout_to_steady_state(model, p.phi, opts);
        p.q = ss.q;
        p.p_ee = end_effector_pose(ss.q, model.geom()).position();
        p.ok = true;
      } catch (const Error& e) {
        p.failure = e.what();
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace hsa
