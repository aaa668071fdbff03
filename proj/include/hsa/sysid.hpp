#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hsa/dynamics.hpp"
#include "hsa/sim/trajectory.hpp"

namespace hsa {

struct SteadyStateSample {
  ActuationAngles phi{ActuationAngles::Zero()};
  Configuration q;          // mean over the tail of the hold
  double max_speed{0.0};    // largest ||q_dot|| over the tail
  double t_start{0.0};      // hold interval
  double t_end{0.0};
};

struct SysIdDataset {
  std::vector<SteadyStateSample> samples;
};

// Splits the trajectory into holds of constant phi and averages q over the final 20% of
// each hold. Holds whose tail has max ||q_dot|| >= settle_tol are dropped. Throws
// EmptyDatasetError when nothing is left.
SysIdDataset extract_steady_states(const sim::Trajectory& traj, double settle_tol);

struct ElongationFit {
  double c_eps{0.0};
  double intercept{0.0};   // axial strain at zero twist
  double residual_rms{0.0};
};

// OLS of the backbone axial strain against phi+/l0 (phi+ the mean handedness-signed
// twist), with an intercept. Needs at least two distinct twist levels.
ElongationFit regress_elongation(const SysIdDataset& data, const HsaParams& params);

struct StiffnessFitOptions {
  // Estimate C_eps jointly (as two bilinear products) or hold it at params.c_eps.
  bool estimate_c_eps{true};
  // Relative singular-value threshold below which a direction counts as unidentifiable.
  double rank_tol{1e-10};
};

struct StiffnessFit {
  StiffnessCoefficients stiffness;
  double c_eps{0.0};
  double residual_rms{0.0};  // of the static balance [N or N m]
  int equations{0};
};

// Linear least squares on the static balance G(q) + sum_i J_i^T S_i(phi)(J_i q - xi0 -
// eps_i e3) = 0, which is linear in the stiffness coefficients (and in the products
// S_ax_hat C_eps, C_S_ax C_eps). Geometry, masses and rest strain come from `known`.
// Throws IllPosedRegressionError naming the coefficients that cannot be separated.
StiffnessFit regress_stiffness(const SysIdDataset& data, const HsaParams& known,
                               const StiffnessFitOptions& opts = {});

// Names of the regressed coefficients in column order.
const std::vector<std::string>& stiffness_regressor_names();

// Rest axial strain from a settled, unactuated end-effector pose: inverse kinematics,
// then the axial static balance solved for sigma_ax0.
double calibrate_rest_strain(const PlanarPose& pose, const HsaParams& params);

}  // namespace hsa
