#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "hsa/error.hpp"

namespace hsa::sim {

namespace detail {

template <class State>
bool state_finite(const State& x) {
  if constexpr (requires { x.allFinite(); }) {
    return x.allFinite();
  } else {
    using std::isfinite;
    return isfinite(x);
  }
}

template <class State>
double error_norm(const State& e) {
  if constexpr (requires { e.cwiseAbs().maxCoeff(); }) {
    return static_cast<double>(e.cwiseAbs().maxCoeff());
  } else {
    using std::abs;
    return static_cast<double>(abs(e));
  }
}

}  // namespace detail

template <class State>
struct StepResult {
  State x;            // 5th-order solution
  double error{0.0};  // max-norm of (5th - embedded 4th) solution
};

// Fixed-step Dormand-Prince 5(4). The last stage of a step is the first stage of the
// next (FSAL); call invalidate() whenever the right-hand side changes between steps,
// e.g. after a zero-order-hold input update.
template <class State, class Scalar = double>
class Dopri5 {
 public:
  template <class F>
  StepResult<State> step(F&& f, Scalar t, const State& x, Scalar dt) {
    static const Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                        c5 = Scalar(8) / 9;
    static const Scalar a21 = Scalar(1) / 5;
    static const Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    static const Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    static const Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                        a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    static const Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                        a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                        a65 = Scalar(-5103) / 18656;
    static const Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                        b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
    // b - b_hat, the embedded 4th-order weights subtracted from the 5th-order ones
    static const Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                        e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                        e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;

    const State k1 = fsal_ ? *fsal_ : State(f(t, x));
    const State k2 = f(t + c2 * dt, State(x + dt * (a21 * k1)));
    const State k3 = f(t + c3 * dt, State(x + dt * (a31 * k1 + a32 * k2)));
    const State k4 = f(t + c4 * dt, State(x + dt * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 =
        f(t + c5 * dt, State(x + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 =
        f(t + dt, State(x + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    State x5 = x + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + dt, x5);
    const State err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    fsal_ = k7;
    return {std::move(x5), detail::error_norm(err)};
  }

  void invalidate() { fsal_.reset(); }

 private:
  std::optional<State> fsal_;
};

template <class State>
struct OdeSolution {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<double> error;  // embedded error estimate of the step that produced x[k]
};

// Integrates x' = f(t, x) on [t0, t1] with a fixed step. The step count is
// round((t1 - t0) / dt); the last time is t0 + n dt.
template <class State, class F>
OdeSolution<State> integrate_dopri(F&& f, const State& x0, double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("integrate_dopri: dt must be > 0");
  if (!(t1 >= t0)) throw InvalidArgument("integrate_dopri: t1 must be >= t0");
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  OdeSolution<State> sol;
  sol.t.reserve(n + 1);
  sol.x.reserve(n + 1);
  sol.error.reserve(n + 1);
  sol.t.push_back(t0);
  sol.x.push_back(x0);
  sol.error.push_back(0.0);
  Dopri5<State> stepper;
  State x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    StepResult<State> r = stepper.step(f, t, x, dt);
    if (!detail::state_finite(r.x)) {
      throw IntegrationDivergedError("integrate_dopri: state became non-finite", t);
    }
    x = std::move(r.x);
    sol.t.push_back(t0 + static_cast<double>(k + 1) * dt);
    sol.x.push_back(x);
    sol.error.push_back(r.error);
  }
  return sol;
}

}  // namespace hsa::sim
