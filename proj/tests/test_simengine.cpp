#include <doctest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <sstream>

#include "hsa/error.hpp"
#include "hsa/planning.hpp"
#include "hsa/sim/closed_loop.hpp"
#include "hsa/sim/excitation.hpp"
#include "hsa/sim/metrics.hpp"
#include "hsa/sim/ode.hpp"
#include "hsa/sim/savgol.hpp"
#include "hsa/sim/trajectory.hpp"

using namespace hsa;
using namespace hsa::sim;

namespace {

// Asymptotic Kolmogorov distribution tail with the usual small-sample correction.
double ks_p_value(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k < 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

PlanResult equilibrium_plan(const HsaModel& model, const Eigen::Vector2d& target) {
  PlannerOptions opts;
  opts.residual_tol = 1e-9;
  return static_inversion_plan(target, model, opts);
}

std::vector<Setpoint> single_setpoint(const PlanResult& plan) {
  return {Setpoint{0.0, plan.chi_ee_d.position(), plan}};
}

}  // namespace

TEST_CASE("DOPRI5 on trivial and linear problems") {
  const auto zero = [](double, const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
  const auto c = integrate_dopri(zero, Eigen::Vector2d(1.0, -2.0), 0.0, 1.0, 0.1);
  for (const auto& x : c.x) CHECK(x == Eigen::Vector2d(1.0, -2.0));
  CHECK(c.t.back() == doctest::Approx(1.0));

  const auto decay = [](double, double x) { return -x; };
  const auto sol = integrate_dopri(decay, 1.0, 0.0, 1.0, 1e-3);
  CHECK(std::abs(sol.x.back() - std::exp(-1.0)) < 1e-9);
  CHECK(std::abs(sol.x.back() - 0.3678794412) < 1e-9);
  CHECK(sol.t.size() == 1001);
  // embedded estimate tracks the local error, which is tiny here
  CHECK(*std::max_element(sol.error.begin(), sol.error.end()) < 1e-14);
}

TEST_CASE("DOPRI5 global error is fifth order") {
  using Real = boost::multiprecision::cpp_bin_float_50;
  const auto decay = [](Real, const Real& x) { return Real(-x); };
  std::vector<double> dts{1e-2, 5e-3, 2.5e-3}, errors;
  for (double dt : dts) {
    Dopri5<Real, Real> stepper;
    Real x = 1, t = 0;
    const Real h = Real(1) / static_cast<int>(std::lround(1.0 / dt));
    for (long k = 0; k < std::lround(1.0 / dt); ++k) {
      x = stepper.step(decay, t, x, h).x;
      t += h;
    }
    errors.push_back(static_cast<double>(abs(x - exp(Real(-1)))));
  }
  for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
    const double slope = std::log(errors[i] / errors[i + 1]) / std::log(dts[i] / dts[i + 1]);
    CHECK(slope == doctest::Approx(5.0).epsilon(0.3 / 5.0));
  }
}

TEST_CASE("DOPRI5 on the harmonic oscillator over a thousand periods") {
  const auto f = [](double, const Eigen::Vector2d& x) { return Eigen::Vector2d(x(1), -x(0)); };
  const double dt = 2.0 * M_PI / 400.0;
  const auto sol = integrate_dopri(f, Eigen::Vector2d(1.0, 0.0), 0.0, 1000 * 2.0 * M_PI, dt);
  double drift = 0.0;
  for (const auto& x : sol.x) drift = std::max(drift, std::abs(0.5 * x.squaredNorm() - 0.5));
  CHECK(drift / 0.5 < 1e-6);
}

TEST_CASE("DOPRI5 reports blow-up and bad steps") {
  const auto blow = [](double, double x) { return x * x; };
  CHECK_THROWS_AS(integrate_dopri(blow, 1.0, 0.0, 2.0, 1e-2), IntegrationDivergedError);
  CHECK_THROWS_AS(integrate_dopri(blow, 1.0, 0.0, 1.0, 0.0), InvalidArgument);
  try {
    integrate_dopri(blow, 1.0, 0.0, 2.0, 1e-2);
  } catch (const IntegrationDivergedError& e) {
    CHECK(e.last_valid_time() < 1.05);
    CHECK(e.last_valid_time() > 0.9);
  }
}

TEST_CASE("GBN excitation") {
  const double phi_max = 3.4, tau = 0.5, dt = 0.025;
  const PiecewiseConstantSignal sig = gbn_sequence(tau, phi_max, 2e5 * dt, dt, 7);
  REQUIRE(sig.values.size() == 200000);
  std::vector<double> unit_levels;
  std::size_t holds = 0;
  for (std::size_t k = 0; k < sig.values.size(); ++k) {
    CHECK_FALSE(((sig.values[k].array() < 0.0).any() || (sig.values[k].array() > phi_max).any()));
    if (k == 0 || sig.values[k] != sig.values[k - 1]) {
      ++holds;
      unit_levels.push_back(sig.values[k](0) / phi_max);
      unit_levels.push_back(sig.values[k](1) / phi_max);
    }
  }
  const double mean_hold = sig.duration() / static_cast<double>(holds);
  CHECK(std::abs(mean_hold - tau) / tau < 0.05);
  CHECK(holds > 5000);
  CHECK(ks_p_value(unit_levels) > 0.01);

  const PiecewiseConstantSignal again = gbn_sequence(tau, phi_max, 10.0, dt, 7);
  const PiecewiseConstantSignal other = gbn_sequence(tau, phi_max, 10.0, dt, 8);
  CHECK(std::equal(again.values.begin(), again.values.end(), sig.values.begin()));
  CHECK_FALSE(std::equal(again.values.begin(), again.values.end(), other.values.begin()));
  CHECK_THROWS_AS(gbn_sequence(0.0, phi_max, 1.0, dt, 1), InvalidArgument);
}

TEST_CASE("step and staircase excitation") {
  const PiecewiseConstantSignal one = step_staircase_sequence({ActuationAngles(1.0, 2.0)}, 2.0, 0.025);
  CHECK(one.duration() == doctest::Approx(2.0));
  CHECK(std::all_of(one.values.begin(), one.values.end(), [](const auto& v) { return v == ActuationAngles(1, 2); }));

  const auto levels = staircase_levels(ActuationAngles::Zero(), ActuationAngles(3.4, 3.4), 5);
  REQUIRE(levels.size() == 5);
  CHECK(levels.back() == ActuationAngles(3.4, 3.4));
  const PiecewiseConstantSignal stairs = step_staircase_sequence(levels, 1.5, 0.01);
  CHECK(stairs.duration() == doctest::Approx(5 * 1.5));
  for (std::size_t k = 1; k < stairs.values.size(); ++k) {
    CHECK((stairs.values[k].array() >= stairs.values[k - 1].array()).all());
  }
  CHECK(stairs.at(1.5) == levels[1]);
  CHECK(stairs.at(1.49) == levels[0]);
  CHECK_THROWS_AS(step_staircase_sequence({}, 1.0, 0.01), InvalidArgument);
}

TEST_CASE("Savitzky-Golay derivative") {
  const double dt = 5e-3;
  std::vector<double> constant(200, 1.7), quadratic, sine;
  for (int k = 0; k < 200; ++k) {
    const double t = k * dt;
    quadratic.push_back(3.0 * t * t - 2.0 * t + 0.5);
    sine.push_back(std::sin(t));
  }
  for (double d : savgol_derivative(constant, 0.1, 3, dt)) CHECK(std::abs(d) < 1e-12);

  const auto dq = savgol_derivative(quadratic, 0.1, 2, dt);
  const auto ds = savgol_derivative(sine, 0.1, 3, dt);
  const int half = savgol_window_length(0.1, dt) / 2;
  CHECK(savgol_window_length(0.1, dt) == 21);
  double worst_q = 0.0, worst_s = 0.0, worst_edge = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double t = k * dt;
    const double eq = std::abs(dq[k] - (6.0 * t - 2.0));
    if (k >= half && k < 200 - half) {
      worst_q = std::max(worst_q, eq);
      worst_s = std::max(worst_s, std::abs(ds[k] - std::cos(t)));
    } else {
      worst_edge = std::max(worst_edge, eq);  // off-centre fits still reproduce quadratics
    }
  }
  CHECK(worst_q < 1e-10);
  CHECK(worst_s < 1e-3);
  CHECK(worst_edge < 1e-8);

  CHECK_THROWS_AS(savgol_derivative(sine, 0.01, 3, dt), InvalidArgument);
  CHECK_THROWS_AS(savgol_derivative(std::vector<double>(5, 0.0), 0.1, 3, dt), InvalidArgument);
}

TEST_CASE("RMSE metric") {
  const std::vector<Eigen::Vector2d> zeros{{0, 0}, {0, 0}};
  CHECK(rmse(zeros, zeros) == 0.0);
  CHECK(rmse(zeros, {{3e-3, 0}, {0, 4e-3}}) == doctest::Approx(3.5355e-3).epsilon(1e-4));
  CHECK(rmse(zeros, {{-2e-3, 0}, {-2e-3, 0}}) == doctest::Approx(2e-3));
  CHECK_THROWS_AS(rmse(zeros, {{0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(rmse({}, {}), InvalidArgument);
}

TEST_CASE("trajectory CSV round trip") {
  Trajectory traj;
  for (int k = 0; k < 5; ++k) {
    TrajectorySample s;
    s.t = 0.025 * k;
    s.state.q = {1.0 / 3.0 + k, -1e-7, 0.2};
    s.state.q_dot = Eigen::Vector3d(k, M_PI, -2.5e-12);
    s.phi = ActuationAngles(0.1 * k, 3.4);
    s.ee = {0.001 * k, 0.06, -0.5};
    if (k > 1) s.ref = Eigen::Vector2d(0.002, 0.07);
    traj.push_back(s);
  }
  std::stringstream ss;
  traj.write_csv(ss);
  const std::string text = ss.str();
  CHECK(text.rfind("t,q1,q2,q3,qd1,qd2,qd3,phi1,phi2,pee_x,pee_y,theta_ee,ref_x,ref_y\n", 0) == 0);
  std::stringstream in(text);
  const Trajectory back = Trajectory::read_csv(in);
  REQUIRE(back.size() == traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(back[k].t == traj[k].t);
    CHECK(back[k].state.q.vec() == traj[k].state.q.vec());
    CHECK(back[k].state.q_dot == traj[k].state.q_dot);
    CHECK(back[k].phi == traj[k].phi);
    CHECK(back[k].ee.vec() == traj[k].ee.vec());
    CHECK(std::isnan(back[k].ref.x()) == std::isnan(traj[k].ref.x()));
  }
  CHECK(back.uniform_dt() == doctest::Approx(0.025));

  TrajectorySample late;
  late.t = 0.0;
  CHECK_THROWS_AS(traj.push_back(late), InvalidArgument);
  std::stringstream bad("t,q1\n0,1\n");
  CHECK_THROWS_AS(Trajectory::read_csv(bad), ConfigError);
}

TEST_CASE("closed loop holds an equilibrium") {
  const HsaModel model(fpu_params());
  const PlanResult plan = equilibrium_plan(model, Eigen::Vector2d(0.005, 0.072));
  SimConfig sim;
  sim.duration = 2.0;
  sim.initial_phi = plan.phi_ss;  // the robot already rests under the planned actuation
  for (ControllerKind kind : {ControllerKind::PSatID, ControllerKind::PSatIDGc, ControllerKind::Pid}) {
    const Trajectory traj = closed_loop_sim(model, {plan.q_d, Eigen::Vector3d::Zero()}, single_setpoint(plan),
                                            kind, Gains{}, sim);
    double worst = 0.0;
    for (const auto& s : traj.samples()) worst = std::max(worst, (s.ee.position() - plan.chi_ee_d.position()).norm());
    CHECK(worst < 1e-6);
    CHECK(traj.back().t == doctest::Approx(2.0));
  }
}

TEST_CASE("closed loop updates commands only at the control rate") {
  const HsaModel model(fpu_params());
  const PlanResult plan = equilibrium_plan(model, Eigen::Vector2d(-0.006, 0.07));
  SimConfig sim;
  sim.duration = 0.5;
  sim.log_interval = 1e-3;
  const Trajectory traj = closed_loop_sim(model, {model.rest_configuration(), Eigen::Vector3d::Zero()},
                                          single_setpoint(plan), ControllerKind::PSatID, Gains{}, sim);
  int changes = 0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj[k].phi != traj[k - 1].phi) {
      ++changes;
      const double periods = traj[k].t / 0.025;
      CHECK(std::abs(periods - std::round(periods)) < 1e-6);
    }
  }
  CHECK(changes > 2);
  CHECK(traj.uniform_dt() == doctest::Approx(1e-3));
}

TEST_CASE("closed loop respects saturation and is deterministic") {
  const HsaModel model(fpu_params());
  const PlanResult plan = equilibrium_plan(model, Eigen::Vector2d(0.01, 0.068));
  SimConfig sim;
  sim.duration = 1.0;
  sim.observation = ObservationMode::PosePipeline;
  sim.pose_noise_std = 1e-5;
  sim.seed = 3;
  const RobotState x0{model.rest_configuration(), Eigen::Vector3d::Zero()};
  const Trajectory a = closed_loop_sim(model, x0, single_setpoint(plan), ControllerKind::Pid, Gains{}, sim);
  const Trajectory b = closed_loop_sim(model, x0, single_setpoint(plan), ControllerKind::Pid, Gains{}, sim);
  std::stringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  CHECK(sa.str() == sb.str());
  for (const auto& s : a.samples()) {
    CHECK((s.phi.array() >= 0.0).all());
    CHECK((s.phi.array() <= 3.4).all());
  }
}

TEST_CASE("pose pipeline without noise regulates like exact observation") {
  const HsaModel model(fpu_params());
  const PlanResult plan = equilibrium_plan(model, Eigen::Vector2d(0.008, 0.07));
  SimConfig sim;
  sim.duration = 3.0;
  sim.observation = ObservationMode::PosePipeline;
  const Trajectory traj = closed_loop_sim(model, {model.rest_configuration(), Eigen::Vector3d::Zero()},
                                          single_setpoint(plan), ControllerKind::PSatID, Gains{}, sim);
  CHECK((traj.back().ee.position() - plan.chi_ee_d.position()).norm() < 1e-4);
}

TEST_CASE("open-loop simulation follows the input signal") {
  const HsaModel model(fpu_params());
  const PiecewiseConstantSignal input = step_staircase_sequence({ActuationAngles(1.0, 2.0)}, 2.0, 0.025);
  SimConfig sim;
  const Trajectory traj = simulate_open_loop(model, {model.rest_configuration(), Eigen::Vector3d::Zero()}, input, sim);
  CHECK(traj.back().t == doctest::Approx(2.0));
  CHECK(traj.back().phi == ActuationAngles(1.0, 2.0));
  CHECK(model.static_residual(traj.back().state.q, ActuationAngles(1.0, 2.0)).norm() < 1e-6);
}

TEST_CASE("sim config validation") {
  SimConfig sim;
  sim.dt_physics = -1.0;
  CHECK_THROWS_AS(sim.validate(), ConfigError);
  sim = SimConfig{};
  CHECK(sim.steps_per_control() == 250);
  CHECK(sim.steps_per_log() == 250);
  CHECK(controller_from_string("psatid_gc") == ControllerKind::PSatIDGc);
  CHECK_THROWS(controller_from_string("lqr"));
}

TEST_CASE("step metrics") {
  Trajectory traj;
  for (int k = 0; k <= 100; ++k) {
    TrajectorySample s;
    s.t = 0.01 * k;
    const double t = s.t;
    s.ref = Eigen::Vector2d(0.01, 0.0);
    s.ee = {0.01 * (1.0 - std::exp(-5.0 * t)), 0.0, 0.0};
    traj.push_back(s);
  }
  const auto m = step_metrics(traj, {0.0}, 1e-3);
  REQUIRE(m.size() == 1);
  CHECK(m[0].initial_error == doctest::Approx(0.01));
  // 90% of the initial error is removed once exp(-5t) <= 0.1
  CHECK(m[0].time_to_90 == doctest::Approx(std::ceil(std::log(10.0) / 5.0 / 0.01) * 0.01));
  CHECK(m[0].settle_time == doctest::Approx(0.47));
  CHECK(m[0].final_error == doctest::Approx(0.01 * std::exp(-5.0)));
}
