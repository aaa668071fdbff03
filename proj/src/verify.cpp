#include "hsa/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include <json.hpp>

#include "hsa/collocated.hpp"
#include "hsa/error.hpp"
#include "hsa/planning.hpp"
#include "hsa/sim/closed_loop.hpp"
#include "hsa/sim/excitation.hpp"
#include "hsa/sim/ode.hpp"
#include "hsa/sysid.hpp"

namespace hsa {

namespace {

struct Sampler {
  std::mt19937_64 rng;
  double phi_max;

  Configuration config() {
    std::uniform_real_distribution<double> k(-15.0, 15.0), sh(-0.2, 0.2), ax(-0.1, 0.6);
    return {k(rng), sh(rng), ax(rng)};
  }
  Eigen::Vector3d velocity() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {20.0 * u(rng), 0.5 * u(rng), 0.5 * u(rng)};
  }
  ActuationAngles phi() {
    std::uniform_real_distribution<double> u(0.0, phi_max);
    return {u(rng), u(rng)};
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

template <class F>
Eigen::Vector3d fd_gradient(F&& f, const Configuration& q, double h) {
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d qp = q.vec(), qm = q.vec();
    qp(i) += h;
    qm(i) -= h;
    g(i) = (f(Configuration::from(qp)) - f(Configuration::from(qm))) / (2.0 * h);
  }
  return g;
}

CheckResult run_check(const std::string& name, double tol, const std::function<double(std::string&)>& body) {
  CheckResult r;
  r.name = name;
  r.tolerance = tol;
  try {
    r.value = body(r.detail);
    r.passed = std::isfinite(r.value) && r.value < tol;
  } catch (const std::exception& e) {
    r.value = std::numeric_limits<double>::infinity();
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  return r;
}

using State6 = Eigen::Matrix<double, 6, 1>;

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::to_json() const {
  nlohmann::json root;
  root["material"] = material;
  root["passed"] = passed();
  root["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    root["checks"].push_back({{"name", c.name},
                              {"passed", c.passed},
                              {"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json("inf")},
                              {"tolerance", c.tolerance},
                              {"detail", c.detail}});
  }
  return root.dump(2) + "\n";
}

VerifyReport run_verification(const HsaModel& model, const VerifyOptions& opts) {
  const HsaParams& p = model.params();
  const BackboneGeometry& g = model.geom();
  const int n = std::max(1, opts.samples);
  VerifyReport report;
  report.material = p.name;
  auto& out = report.checks;

  out.push_back(run_check("kinematics_round_trip", 1e-9, [&](std::string&) {
    Sampler s{std::mt19937_64(opts.seed), p.phi_max};
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Configuration q = s.config();
      const Configuration back = inverse_kinematics(end_effector_pose(q, g), g.l0);
      worst = std::max(worst, (back.vec() - q.vec()).cwiseAbs().maxCoeff());
    }
    return worst;
  }));

  out.push_back(run_check("inertia_positive_definite", 0.5, [&](std::string& detail) {
    Sampler s{std::mt19937_64(opts.seed + 1), p.phi_max};
    double min_eig = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(model.inertia_matrix(s.config()));
      min_eig = std::min(min_eig, eig.eigenvalues()(0));
    }
    detail = "min eigenvalue " + fmt(min_eig);
    return min_eig > 0.0 ? 0.0 : 1.0;
  }));

  out.push_back(run_check("skew_symmetry", 1e-8, [&](std::string&) {
    Sampler s{std::mt19937_64(opts.seed + 2), p.phi_max};
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Configuration q = s.config();
      const Eigen::Vector3d v = s.velocity();
      const auto dM = model.inertia_derivatives(q);
      const Eigen::Matrix3d Mdot = dM[0] * v(0) + dM[1] * v(1) + dM[2] * v(2);
      const Eigen::Matrix3d N = Mdot - 2.0 * model.coriolis_matrix(q, v);
      worst = std::max(worst, rel(std::abs(v.dot(N * v)), Mdot.norm() * v.squaredNorm()));
    }
    return worst;
  }));

  out.push_back(run_check("gravity_is_potential_gradient", 1e-7, [&](std::string&) {
    Sampler s{std::mt19937_64(opts.seed + 3), p.phi_max};
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Configuration q = s.config();
      const Eigen::Vector3d fd =
          fd_gradient([&](const Configuration& c) { return model.gravitational_potential(c); }, q, 1e-5);
      const Eigen::Vector3d G = model.gravity_vector(q);
      worst = std::max(worst, rel((G - fd).norm(), G.norm()));
    }
    return worst;
  }));

  out.push_back(run_check("elastic_force_is_potential_gradient", 1e-7, [&](std::string&) {
    Sampler s{std::mt19937_64(opts.seed + 4), p.phi_max};
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Configuration q = s.config();
      const ActuationAngles phi = s.phi();
      const Eigen::Vector3d fd = fd_gradient(
          [&](const Configuration& c) { return model.elastic_potential(c, phi); }, q, 1e-5);
      const Eigen::Vector3d F = model.elastic_force(q, phi);
      const ElasticSplit e = model.elastic_and_actuation(q, phi);
      worst = std::max({worst, rel((F - fd).norm(), F.norm()),
                        rel((e.k_force - e.alpha - F).norm(), F.norm())});
    }
    return worst;
  }));

  // The elastic potential must be convex in q for every admissible twist; a stiffness
  // with the wrong sign shows up here.
  out.push_back(run_check("elastic_potential_convex", 0.5, [&](std::string& detail) {
    double min_eig = std::numeric_limits<double>::infinity();
    const int m = 9;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const ActuationAngles phi(p.phi_max * a / (m - 1), p.phi_max * b / (m - 1));
        const Eigen::Matrix3d K = model.stiffness_matrix(phi);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (K + K.transpose()));
        min_eig = std::min(min_eig, eig.eigenvalues()(0));
      }
    }
    detail = "min stiffness eigenvalue over the twist grid " + fmt(min_eig);
    return min_eig > 0.0 ? 0.0 : 1.0;
  }));

  const RobotState perturbed{
      Configuration::from(model.rest_configuration().vec() + Eigen::Vector3d(4.0, 0.02, 0.05)),
      Eigen::Vector3d(10.0, 0.0, 0.2)};
  const ActuationAngles phi_mid = ActuationAngles::Constant(0.5 * p.phi_max);

  out.push_back(run_check("energy_conservation_undamped", 1e-6, [&](std::string& detail) {
    const Eigen::Matrix3d zero = Eigen::Matrix3d::Zero();
    const auto rhs = [&](double, const State6& x) -> State6 {
      const StateRate r = model.forward_dynamics({Configuration::from(x.head<3>()), x.tail<3>()}, phi_mid, zero);
      State6 d;
      d << r.q_dot, r.q_ddot;
      return d;
    };
    State6 x0;
    x0 << perturbed.q.vec(), perturbed.q_dot;
    const auto sol = sim::integrate_dopri(rhs, x0, 0.0, 0.2, 1e-4);
    const double e0 = model.total_energy(perturbed, phi_mid);
    double drift = 0.0;
    for (const State6& x : sol.x) {
      drift = std::max(drift, std::abs(model.total_energy({Configuration::from(x.head<3>()), x.tail<3>()}, phi_mid) - e0));
    }
    detail = "max |E - E0| = " + fmt(drift) + " J";
    return rel(drift, std::abs(e0));
  }));

  out.push_back(run_check("energy_non_increasing_damped", 1e-9, [&](std::string&) {
    const auto rhs = [&](double, const State6& x) -> State6 {
      const StateRate r = model.forward_dynamics({Configuration::from(x.head<3>()), x.tail<3>()}, phi_mid);
      State6 d;
      d << r.q_dot, r.q_ddot;
      return d;
    };
    State6 x0;
    x0 << perturbed.q.vec(), perturbed.q_dot;
    const auto sol = sim::integrate_dopri(rhs, x0, 0.0, 0.2, 1e-4);
    double worst_rise = 0.0, prev = model.total_energy(perturbed, phi_mid);
    for (const State6& x : sol.x) {
      const double e = model.total_energy({Configuration::from(x.head<3>()), x.tail<3>()}, phi_mid);
      worst_rise = std::max(worst_rise, e - prev);
      prev = e;
    }
    return worst_rise;
  }));

  out.push_back(run_check("collocation_identity", 1e-8, [&](std::string&) {
    Sampler s{std::mt19937_64(opts.seed + 5), p.phi_max};
    double worst = 0.0;
    const Eigen::Matrix<double, 3, 2> target = (Eigen::Matrix<double, 3, 2>() << 1, 0, 0, 1, 0, 0).finished();
    for (int k = 0; k < n; ++k) {
      const Configuration q = s.config();
      const ActuationAngles phi = s.phi();
      const Eigen::Matrix3d Jh = collocated_jacobian(model, q, phi);
      const Eigen::Matrix<double, 3, 2> A = model.actuation_jacobian(q, phi);
      worst = std::max({worst, rel((Jh.topRows<2>() - A.transpose()).norm(), A.norm()),
                        (collocated_input_matrix(model, q, phi) - target).cwiseAbs().maxCoeff()});
    }
    return worst;
  }));

  if (opts.include_planner) {
    out.push_back(run_check("planner_round_trip", 1e-4, [&](std::string&) {
      PlannerOptions po;
      po.t_ss = 3.0;
      double worst = 0.0;
      for (const ActuationAngles& frac : {ActuationAngles(0.3, 0.6), ActuationAngles(0.7, 0.2)}) {
        const ActuationAngles phi_star = frac * p.phi_max;
        const RobotState ss = rollout_to_steady_state(model, phi_star, po);
        const Eigen::Vector2d target = end_effector_pose(ss.q, g).position();
        const PlanResult plan = static_inversion_plan(target, model, po);
        const RobotState back = rollout_to_steady_state(model, plan.phi_ss, po);
        // [m]; 0.1 mm tolerance
        worst = std::max(worst, (end_effector_pose(back.q, g).position() - target).norm());
      }
      return worst;
    }));
  }

  if (opts.include_sysid) {
    out.push_back(run_check("sysid_recovery", 1e-2, [&](std::string& detail) {
      std::vector<ActuationAngles> levels;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) levels.emplace_back(p.phi_max * a / 2.0, p.phi_max * b / 2.0);
      }
      const auto input = sim::step_staircase_sequence(levels, 1.5, 1e-3);
      sim::SimConfig sc;
      sc.log_interval = 1e-2;
      const auto traj = sim::simulate_open_loop(model, {model.rest_configuration(), Eigen::Vector3d::Zero()},
                                                input, sc);
      const StiffnessFit fit = regress_stiffness(extract_steady_states(traj, 1e-6), p);
      const auto& t = p.stiffness;
      const auto& e = fit.stiffness;
      const double truth[] = {t.S_be_hat, t.C_S_be, t.S_sh_hat, t.C_S_sh, t.S_ax_hat, t.C_S_ax, t.S_b_sh, p.c_eps};
      const double est[] = {e.S_be_hat, e.C_S_be, e.S_sh_hat, e.C_S_sh, e.S_ax_hat, e.C_S_ax, e.S_b_sh, fit.c_eps};
      double worst = 0.0;
      for (std::size_t i = 0; i < std::size(truth); ++i) {
        // zero-valued truths are compared absolutely against the coefficient scale
        const double scale = truth[i] != 0.0 ? std::abs(truth[i]) : 1.0;
        worst = std::max(worst, std::abs(est[i] - truth[i]) / scale);
      }
      detail = "worst relative coefficient error over 9 settled holds";
      return worst;
    }));
  }
  return report;
}

}  // namespace hsa
