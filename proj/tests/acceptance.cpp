// Acceptance run: one PASS/FAIL line per criterion. Every criterion can be run on its own
// with --only N. The exit status is 0 iff the set of failing criteria equals the set given
// with --expect-fail (empty by default), so a criterion that starts passing is as visible
// as one that starts failing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <CLI11.hpp>

#include "hsa/cli/experiment.hpp"
#include "hsa/collocated.hpp"
#include "hsa/dynamics.hpp"
#include "hsa/kinematics.hpp"
#include "hsa/planning.hpp"
#include "hsa/sim/closed_loop.hpp"
#include "hsa/sim/excitation.hpp"
#include "hsa/sim/metrics.hpp"
#include "hsa/sim/ode.hpp"
#include "hsa/sysid.hpp"
#include "oracles.hpp"

using namespace hsa;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RobotState at_rest(const HsaModel& model) { return {model.rest_configuration(), Eigen::Vector3d::Zero()}; }

// Settled end-effector position under constant phi, simulated at the physics step.
Eigen::Vector2d settle(const HsaModel& model, const ActuationAngles& phi, bool* settled) {
  const RobotState x = sim::integrate_constant_input(model, at_rest(model), phi, 5.0, 1e-4);
  if (settled) *settled = x.q_dot.norm() < 1e-6;
  return end_effector_pose(x.q, model.geom()).position();
}

// ---------------------------------------------------------------------------------------

Outcome kinematic_round_trip() {
  const BackboneGeometry g = fpu_params().geom;
  oracle::Sampler rnd(101);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0, worst_band = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Configuration q = rnd.config();
    const bool band = k % 4 == 0;
    if (band) q.kappa_be = rnd.uniform(-1e-6, 1e-6);
    const Configuration back = inverse_kinematics(end_effector_pose(q, g), g.l0);
    const double e = (back.vec() - q.vec()).cwiseAbs().maxCoeff();
    worst = std::max(worst, e);
    if (band) worst_band = std::max(worst_band, e);
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-9 && elapsed < 2.0,
          fmt("10^4 samples, max |q - IK(FK(q))| = %.2e (|kappa| <= 1e-6 band: ", worst) +
              fmt("%.2e), ", worst_band) + fmt("%.3f s", elapsed)};
}

Outcome ode_oracle() {
  const BackboneGeometry g = fpu_params().geom;
  oracle::Sampler rnd(102);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Configuration q = rnd.config();
    worst = std::max(worst,
                     (end_effector_pose(q, g).vec() - oracle::integrate_pose(q, g.l0)).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-8, fmt("100 configurations, max |closed form - RK4 pose ODE| = %.2e", worst)};
}

Outcome lagrangian_structure() {
  const HsaModel model(fpu_params());
  oracle::Sampler rnd(103);
  double min_eig = INFINITY, worst_skew = 0.0, worst_grad = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Configuration q = rnd.config();
    const Eigen::Vector3d qd = rnd.velocity();
    const Eigen::Matrix3d M = model.inertia_matrix(q);
    const Eigen::Matrix3d Ms = 0.5 * (M + M.transpose());
    if ((M - Ms).cwiseAbs().maxCoeff() > 1e-12 * M.norm()) min_eig = -INFINITY;
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(Ms).eigenvalues()(0));

    const auto dM = model.inertia_derivatives(q);
    const Eigen::Matrix3d Md = dM[0] * qd(0) + dM[1] * qd(1) + dM[2] * qd(2);
    const Eigen::Matrix3d C = model.coriolis_matrix(q, qd);
    worst_skew = std::max(worst_skew, std::abs(qd.dot((Md - 2.0 * C) * qd)) / (M.norm() * qd.squaredNorm()));

    const Eigen::Vector3d fd = oracle::gradient(
        [&](const Eigen::Vector3d& x) { return model.gravitational_potential(Configuration::from(x)); }, q.vec(),
        1e-6);
    worst_grad = std::max(worst_grad, (model.gravity_vector(q) - fd).cwiseAbs().maxCoeff());
  }
  const bool pass = min_eig > 0.0 && worst_skew < 1e-8 && worst_grad < 1e-7;
  return {pass, fmt("10^3 samples: min eig(M) = %.3e, max |qd^T (Mdot - 2C) qd| / (|M| |qd|^2) = %.2e, ", min_eig,
                    worst_skew) +
                    fmt("max |G - grad U| = %.2e", worst_grad)};
}

Outcome energy() {
  const HsaModel model(fpu_params());
  const ActuationAngles phi(1.5, 2.5);
  using State = Eigen::Matrix<double, 6, 1>;
  State x;
  x << 3.0, 0.02, 0.1, 5.0, 0.0, -0.2;
  const auto rhs = [&](const Eigen::Matrix3d* damping) {
    return [&model, &phi, damping](double, const State& s) {
      const RobotState rs{Configuration::from(s.head<3>()), s.tail<3>()};
      const StateRate r = damping ? model.forward_dynamics(rs, phi, *damping) : model.forward_dynamics(rs, phi);
      State d;
      d << r.q_dot, r.q_ddot;
      return d;
    };
  };
  const auto e = [&](const State& s) {
    return model.total_energy({Configuration::from(s.head<3>()), s.tail<3>()}, phi);
  };
  const Eigen::Matrix3d zero = Eigen::Matrix3d::Zero();
  const auto free = sim::integrate_dopri(rhs(&zero), x, 0.0, 1.0, 1e-4);
  const double e0 = e(free.x.front());
  double drift = 0.0;
  for (const auto& s : free.x) drift = std::max(drift, std::abs(e(s) - e0));
  drift /= std::abs(e0);

  const auto damped = sim::integrate_dopri(rhs(nullptr), x, 0.0, 1.0, 1e-4);
  double worst_increase = -INFINITY;
  for (std::size_t k = 1; k < damped.x.size(); ++k) {
    worst_increase = std::max(worst_increase, e(damped.x[k]) - e(damped.x[k - 1]));
  }
  return {drift < 1e-6 && worst_increase < 1e-9,
          fmt("D = 0, 1 s at dt = 1e-4: relative drift %.2e; damped: largest per-step increase %.2e J", drift,
              worst_increase)};
}

Outcome collocation_identity() {
  const HsaParams p = fpu_params();
  const HsaModel model(p);
  oracle::Sampler rnd(105);
  Eigen::Matrix<double, 3, 2> identity = Eigen::Matrix<double, 3, 2>::Zero();
  identity.topRows(2).setIdentity();
  double worst_jh = 0.0, worst_b = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Configuration q = rnd.config();
    const ActuationAngles phi_ss = rnd.phi(p.phi_max);
    const Eigen::Matrix3d Jh = collocated_jacobian(model, q, phi_ss);
    const auto A = model.actuation_jacobian(q, phi_ss);
    worst_jh = std::max(worst_jh, (Jh.topRows(2) - A.transpose()).cwiseAbs().maxCoeff());
    worst_b = std::max(worst_b, (collocated_input_matrix(model, q, phi_ss) - identity).cwiseAbs().maxCoeff());
  }
  return {worst_jh < 1e-8 && worst_b < 1e-8,
          fmt("10^3 samples: max |J_h[0:2] - A^T| = %.2e, max |B_c - [I; 0]| = %.2e", worst_jh, worst_b)};
}

Outcome planner_round_trip() {
  const HsaParams p = fpu_params();
  const HsaModel model(p);
  oracle::Sampler rnd(106);
  double worst_replay = 0.0;
  int unsettled = 0, planner_failures = 0;
  for (int k = 0; k < 20; ++k) {
    bool ok = false;
    const Eigen::Vector2d target = settle(model, rnd.phi(p.phi_max), &ok);
    if (!ok) ++unsettled;
    try {
      const PlanResult plan = static_inversion_plan(target, model, PlannerOptions{});
      const Eigen::Vector2d replay = settle(model, plan.phi_ss, &ok);
      if (!ok) ++unsettled;
      worst_replay = std::max(worst_replay, (replay - target).norm());
    } catch (const PlannerNoConvergeError&) {
      ++planner_failures;
    }
  }

  double worst_rel = 0.0;
  PlannerOptions rollout;
  rollout.method = PlannerMethod::Rollout;
  for (int k = 0; k < 10; ++k) {
    const ActuationAngles interior(rnd.uniform(0.2, 0.8) * p.phi_max, rnd.uniform(0.2, 0.8) * p.phi_max);
    const Eigen::Vector2d target = settle(model, interior, nullptr);
    try {
      const PlanResult a = static_inversion_plan(target, model, PlannerOptions{});
      const PlanResult b = rollout_plan(target, model, rollout);
      worst_rel = std::max(worst_rel, ((a.phi_ss - b.phi_ss).array().abs() / a.phi_ss.array().abs()).maxCoeff());
    } catch (const PlannerNoConvergeError&) {
      ++planner_failures;
    }
  }
  const bool pass = unsettled == 0 && planner_failures == 0 && worst_replay < 1e-4 && worst_rel < 0.02;
  return {pass, fmt("20 random phi*: max replay error %.3e m; ", worst_replay) +
                    fmt("10 interior targets: max relative phi_ss disagreement %.2e; ", worst_rel) +
                    std::to_string(planner_failures) + " planner failures, " + std::to_string(unsettled) +
                    " unsettled rollouts"};
}

Outcome simulated_regulation() {
  const auto t0 = std::chrono::steady_clock::now();
  const HsaModel model(fpu_params());
  const cli::ReferenceConfig ref;  // eleven 10 s steps in the default box
  const PlannerOptions planner;
  const auto reference = cli::eleven_step_reference(model, ref, planner, 0);
  std::vector<double> starts;
  for (const auto& s : reference) starts.push_back(s.t_start);
  sim::SimConfig sc;
  sc.duration = ref.steps * ref.hold_time;
  const Gains gains;

  const auto run = [&](sim::ControllerKind kind) {
    const sim::Trajectory traj = sim::closed_loop_sim(model, at_rest(model), reference, kind, gains, sc);
    return std::make_pair(sim::trajectory_rmse(traj), sim::step_metrics(traj, starts, 1e-3));
  };
  const auto [rmse_m, steps_m] = run(sim::ControllerKind::PSatID);
  const auto [rmse_b, steps_b] = run(sim::ControllerKind::Pid);

  bool settled = true, faster = true;
  double worst_settle = 0.0, worst_final = 0.0;
  int slower_steps = 0;
  for (std::size_t i = 0; i < steps_m.size(); ++i) {
    const double ts = steps_m[i].settle_time;
    if (!(std::isfinite(ts) && ts <= 2.0)) settled = false;
    worst_settle = std::max(worst_settle, std::isfinite(ts) ? ts : INFINITY);
    worst_final = std::max(worst_final, steps_m[i].final_error);
    const double tm = steps_m[i].time_to_90, tb = steps_b[i].time_to_90;
    if (!(std::isfinite(tm) && (!std::isfinite(tb) || tm < tb))) {
      faster = false;
      ++slower_steps;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = steps_m.size() == 11 && settled && rmse_m < rmse_b && faster && elapsed < 600.0;
  return {pass, fmt("P-satI-D: error < 1 mm after at most %.3f s, final error <= %.2e m; ", worst_settle,
                    worst_final) +
                    fmt("RMSE %.3f mm vs PID %.3f mm; ", rmse_m * 1e3, rmse_b * 1e3) +
                    std::to_string(slower_steps) + " steps where P-satI-D is not faster to 90%; " +
                    fmt("%.1f s", elapsed)};
}

double rel(double est, double truth) { return std::abs(est - truth) / std::abs(truth); }

std::vector<double> coefficient_errors(const StiffnessCoefficients& e, const StiffnessCoefficients& t) {
  return {rel(e.S_be_hat, t.S_be_hat), rel(e.C_S_be, t.C_S_be), rel(e.S_sh_hat, t.S_sh_hat),
          rel(e.C_S_sh, t.C_S_sh),     rel(e.S_ax_hat, t.S_ax_hat), rel(e.C_S_ax, t.C_S_ax),
          rel(e.S_b_sh, t.S_b_sh)};
}

Outcome sysid_recovery() {
  const HsaParams truth = fpu_params();
  const HsaModel model(truth);
  std::vector<ActuationAngles> levels;
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) levels.emplace_back(truth.phi_max * a / 4, truth.phi_max * b / 4);
  }
  const auto input = sim::step_staircase_sequence(levels, 2.0, 1e-3);
  sim::SimConfig sc;
  sc.log_interval = 1e-2;
  const sim::Trajectory traj = sim::simulate_open_loop(model, at_rest(model), input, sc);
  const SysIdDataset clean = extract_steady_states(traj, 1e-6);

  const auto fit = [&](const SysIdDataset& d) {
    std::vector<double> err = coefficient_errors(regress_stiffness(d, truth).stiffness, truth.stiffness);
    err.insert(err.begin(), rel(regress_elongation(d, truth).c_eps, truth.c_eps));
    return err;
  };
  const std::vector<double> clean_err = fit(clean);
  const double clean_worst = *std::max_element(clean_err.begin(), clean_err.end());

  // 1% multiplicative noise on every settled strain, 20 seeds; worst case per coefficient
  std::vector<double> noisy_worst(clean_err.size(), 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SysIdDataset d = clean;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (auto& s : d.samples) {
      s.q.kappa_be *= 1.0 + noise(rng);
      s.q.sigma_sh *= 1.0 + noise(rng);
      s.q.sigma_ax *= 1.0 + noise(rng);
    }
    const auto e = fit(d);
    for (std::size_t i = 0; i < e.size(); ++i) noisy_worst[i] = std::max(noisy_worst[i], e[i]);
  }
  const double noisy_max = *std::max_element(noisy_worst.begin(), noisy_worst.end());

  static const char* names[] = {"C_eps", "S_be_hat", "C_S_be", "S_sh_hat", "C_S_sh", "S_ax_hat", "C_S_ax", "S_b_sh"};
  std::string detail = std::to_string(clean.samples.size()) + " holds; noise-free worst relative error " +
                       fmt("%.2e; noisy (1%%, 20 seeds) worst:", clean_worst);
  for (std::size_t i = 0; i < noisy_worst.size(); ++i) {
    detail += std::string(" ") + names[i] + fmt("=%.3g", noisy_worst[i]);
  }
  return {clean_worst < 0.01 && noisy_max < 0.05, detail};
}

Outcome integrator_order() {
  using Real = boost::multiprecision::cpp_bin_float_50;
  const auto decay = [](Real, const Real& x) { return Real(-x); };
  std::vector<double> dts{1e-2, 5e-3, 2.5e-3}, errors;
  for (double dt : dts) {
    sim::Dopri5<Real, Real> stepper;
    const long n = std::lround(1.0 / dt);
    const Real h = Real(1) / n;
    Real x = 1, t = 0;
    for (long k = 0; k < n; ++k) {
      x = stepper.step(decay, t, x, h).x;
      t += h;
    }
    errors.push_back(static_cast<double>(abs(x - exp(Real(-1)))));
  }
  double worst_slope_dev = 0.0, slope = 0.0;
  for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
    slope = std::log(errors[i] / errors[i + 1]) / std::log(dts[i] / dts[i + 1]);
    worst_slope_dev = std::max(worst_slope_dev, std::abs(slope - 5.0));
  }
  const auto sol = sim::integrate_dopri([](double, double x) { return -x; }, 1.0, 0.0, 1.0, 1e-3);
  const double err = std::abs(sol.x.back() - std::exp(-1.0));
  return {worst_slope_dev <= 0.3 && err < 1e-9,
          fmt("slope %.3f (max deviation from 5: ", slope) + fmt("%.3f); |x(1) - e^-1| at dt = 1e-3: %.2e",
                                                                  worst_slope_dev, err)};
}

Outcome workspace_shape() {
  const HsaModel model(fpu_params());
  WorkspaceGrid grid;  // 15 x 15 over [0, phi_max]^2
  const auto pts = workspace_map(model, grid, PlannerOptions{});
  const int n1 = grid.n1, n2 = grid.n2;
  const auto at = [&](int a, int b) -> const WorkspacePoint& { return pts[static_cast<std::size_t>(a * n2 + b)]; };
  int failed = 0;
  double kappa_max = 0.0, asym = 0.0;
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      if (!at(a, b).ok) {
        ++failed;
        continue;
      }
      kappa_max = std::max(kappa_max, std::abs(at(a, b).q.kappa_be));
      // mirror image: swapping the twists reflects the pose about the vertical axis
      if (at(b, a).ok) {
        const Eigen::Vector2d m(-at(b, a).p_ee.x(), at(b, a).p_ee.y());
        asym = std::max(asym, (at(a, b).p_ee - m).norm());
      }
    }
  }
  if (failed > 0 || n1 != n2) return {false, std::to_string(failed) + " grid points did not settle"};

  // Boundary of the reachable set: image of the edges of the twist square, walked in order.
  std::vector<Eigen::Vector2d> ring;
  for (int b = 0; b < n2; ++b) ring.push_back(at(0, b).p_ee);
  for (int a = 1; a < n1; ++a) ring.push_back(at(a, n2 - 1).p_ee);
  for (int b = n2 - 2; b >= 0; --b) ring.push_back(at(n1 - 1, b).p_ee);
  for (int a = n1 - 2; a > 0; --a) ring.push_back(at(a, 0).p_ee);
  // A crescent has a convex outer arc and a concave inner arc: turning directions along
  // the boundary must take both signs, each over a long run of vertices.
  int left = 0, right = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Eigen::Vector2d u = ring[i] - ring[(i + ring.size() - 1) % ring.size()];
    const Eigen::Vector2d v = ring[(i + 1) % ring.size()] - ring[i];
    const double turn = u.x() * v.y() - u.y() * v.x();
    (turn > 0.0 ? left : right)++;
  }
  const int minority = std::min(left, right);
  const Eigen::Vector2d rest = at(0, 0).p_ee, top = at(n1 - 1, n2 - 1).p_ee;
  double y_min = INFINITY, y_max = -INFINITY;
  for (const auto& p : pts) {
    y_min = std::min(y_min, p.p_ee.y());
    y_max = std::max(y_max, p.p_ee.y());
  }
  const bool crescent = minority >= static_cast<int>(ring.size()) / 4 && rest.y() <= y_min + 1e-12 &&
                        top.y() >= y_max - 1e-12 && std::abs(rest.x()) < 1e-12 && std::abs(top.x()) < 1e-12;
  // "of order 11 rad/m": within a factor of two
  const bool kappa_ok = kappa_max > 5.5 && kappa_max < 22.0;
  const bool pass = crescent && kappa_ok && asym < 1e-9;
  return {pass, std::to_string(pts.size()) + " settled points; boundary turns " + std::to_string(left) + " left / " +
                    std::to_string(right) + " right (concave inner arc), rest point lowest and symmetric twist " +
                    "highest on the axis: " + (crescent ? "yes" : "no") + fmt("; max |kappa_be| = %.2f rad/m", kappa_max) +
                    fmt("; mirror asymmetry %.2e m", asym)};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the planar HSA library"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "run just these criteria");
  app.add_option("--expect-fail", expect_fail, "criteria documented as failing");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "kinematic round trip", kinematic_round_trip},
      {2, "pose ODE oracle", ode_oracle},
      {3, "Lagrangian structure", lagrangian_structure},
      {4, "energy conservation and passivity", energy},
      {5, "collocation identity", collocation_identity},
      {6, "planner round trip", planner_round_trip},
      {7, "simulated regulation", simulated_regulation},
      {8, "system identification recovery", sysid_recovery},
      {9, "integrator order", integrator_order},
      {10, "workspace shape", workspace_shape},
  };

  std::set<int> failed;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(c.id);
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << o.detail
              << std::endl;
  }

  std::set<int> expected;
  for (int id : expect_fail) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  }
  if (failed != expected) {
    std::cout << "acceptance: failing set differs from the expected one" << std::endl;
    return 1;
  }
  std::cout << "acceptance: " << failed.size() << " expected failure(s)" << std::endl;
  return 0;
}
