#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsa/dynamics.hpp"

namespace hsa {

struct CheckResult {
  std::string name;
  bool passed{false};
  double value{0.0};      // worst observed metric
  double tolerance{0.0};  // pass iff value < tolerance
  std::string detail;
};

struct VerifyOptions {
  int samples{200};
  std::uint64_t seed{1};
  bool include_planner{true};
  bool include_sysid{true};
};

struct VerifyReport {
  std::string material;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::string to_json() const;
};

// Runs the model's structural property checks: kinematic round trips, Lagrangian
// structure, potential gradients and convexity, energy conservation and passivity,
// the collocation identity, planner consistency and identification recovery.
VerifyReport run_verification(const HsaModel& model, const VerifyOptions& opts = {});

}  // namespace hsa
