#pragma once

#include <cstdint>
#include <vector>

#include "hsa/dynamics.hpp"

namespace hsa::sim {

// Actuation held constant over consecutive intervals of length dt; values[k] applies on
// [k dt, (k+1) dt).
struct PiecewiseConstantSignal {
  double dt{0.0};
  std::vector<ActuationAngles> values;

  double duration() const { return dt * static_cast<double>(values.size()); }
  // Value active at time t; times past the end hold the last value.
  ActuationAngles at(double t) const;
};

// Random hold excitation: at every step the signal switches with probability
// dt / settling_time, so hold durations are geometric with mean settling_time. On a
// switch both components are redrawn uniformly on [0, phi_max].
PiecewiseConstantSignal gbn_sequence(double settling_time, double phi_max, double duration,
                                     double dt, std::uint64_t seed);

// Holds each level for hold_time.
PiecewiseConstantSignal step_staircase_sequence(const std::vector<ActuationAngles>& levels,
                                                double hold_time, double dt);

// n levels from phi_start to phi_end (both components), inclusive.
std::vector<ActuationAngles> staircase_levels(const ActuationAngles& phi_start,
                                              const ActuationAngles& phi_end, int n);

}  // namespace hsa::sim
