#include "hsa/sim/excitation.hpp"

#include <cmath>
#include <random>

#include "hsa/error.hpp"

namespace hsa::sim {

ActuationAngles PiecewiseConstantSignal::at(double t) const {
  if (values.empty()) throw InvalidArgument("PiecewiseConstantSignal::at: empty signal");
  if (t <= 0.0) return values.front();
  // Nudge so that t = k dt lands in interval k despite rounding.
  const auto k = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
  return k < values.size() ? values[k] : values.back();
}

PiecewiseConstantSignal gbn_sequence(double settling_time, double phi_max, double duration,
                                     double dt, std::uint64_t seed) {
  if (!(settling_time > 0.0) || !(duration > 0.0) || !(dt > 0.0) || !(phi_max >= 0.0)) {
    throw InvalidArgument("gbn_sequence: settling_time, duration, dt must be > 0");
  }
  const double p_switch = dt / settling_time;
  if (p_switch > 1.0) throw InvalidArgument("gbn_sequence: dt exceeds settling_time");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.0, phi_max);
  std::bernoulli_distribution switch_now(p_switch);

  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  PiecewiseConstantSignal sig;
  sig.dt = dt;
  sig.values.reserve(n);
  ActuationAngles current(level(rng), level(rng));
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && switch_now(rng)) {
      current = ActuationAngles(level(rng), level(rng));
    }
    sig.values.push_back(current);
  }
  return sig;
}

PiecewiseConstantSignal step_staircase_sequence(const std::vector<ActuationAngles>& levels,
                                                double hold_time, double dt) {
  if (levels.empty()) throw InvalidArgument("step_staircase_sequence: no levels given");
  if (!(hold_time > 0.0) || !(dt > 0.0)) {
    throw InvalidArgument("step_staircase_sequence: hold_time and dt must be > 0");
  }
  const auto per_level = static_cast<std::size_t>(std::llround(hold_time / dt));
  if (per_level == 0) throw InvalidArgument("step_staircase_sequence: hold_time < dt");
  PiecewiseConstantSignal sig;
  sig.dt = dt;
  sig.values.reserve(per_level * levels.size());
  for (const ActuationAngles& l : levels) {
    if (!l.allFinite()) throw InvalidArgument("step_staircase_sequence: non-finite level");
    sig.values.insert(sig.values.end(), per_level, l);
  }
  return sig;
}

std::vector<ActuationAngles> staircase_levels(const ActuationAngles& phi_start,
                                              const ActuationAngles& phi_end, int n) {
  if (n < 1) throw InvalidArgument("staircase_levels: n must be >= 1");
  std::vector<ActuationAngles> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    out.push_back((1.0 - a) * phi_start + a * phi_end);
  }
  return out;
}

}  // namespace hsa::sim
