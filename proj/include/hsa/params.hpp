#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

#include "hsa/kinematics.hpp"

namespace hsa {

// Affine twist-stiffness laws. Every slope multiplies the twist strain phi_plus / l0
// (phi_plus = handedness * phi), which is the regressor the identified values are
// printed against, so coefficients are stored exactly as identified.
struct StiffnessCoefficients {
  double S_be_hat{0.0};  // [N m^2]
  double C_S_be{0.0};    // [N m^2 per rad/m]
  double S_sh_hat{0.0};  // [N]
  double C_S_sh{0.0};    // [N per rad/m]
  double S_ax_hat{0.0};  // [N]
  double C_S_ax{0.0};    // [N per rad/m]
  double S_b_sh{0.0};    // bending-shear coupling [N m/rad]
};

struct DampingCoefficients {
  double zeta_be{0.0};
  double zeta_sh{0.0};
  double zeta_ax{0.0};
};

struct HsaParams {
  std::string name{"custom"};
  BackboneGeometry geom;
  double rod_linear_density{0.0};               // [kg/m] per planar rod
  double rod_rotational_inertia_density{0.0};   // [kg m] per planar rod
  double platform_mass{0.0};                    // [kg]
  double platform_inertia{0.0};                 // [kg m^2]
  Eigen::Vector2d gravity{0.0, 0.0};            // [m/s^2], base frame
  Configuration rest_strain;                    // rod rest strains (kappa0, sigma_sh0, sigma_ax0)
  double c_eps{0.0};                            // elongation coefficient [m/rad]
  StiffnessCoefficients stiffness;
  DampingCoefficients damping;
  double phi_max{0.0};                          // actuation saturation [rad]
  int quadrature_order{5};                      // Gauss-Legendre nodes along s

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Built-in material sets, identical to config/materials/{fpu,epu}.json.
HsaParams fpu_params();
HsaParams epu_params();

// Parse a material file (JSON with // comments allowed).
HsaParams params_from_json_text(std::string_view text);
HsaParams load_params(const std::string& path);
// Resolves "fpu", "epu" or a file path.
HsaParams resolve_material(const std::string& material);

// Serialise back to the material schema. `provenance` lands in a top-level
// "provenance" object when non-empty.
std::string params_to_json_text(const HsaParams& params, const std::string& provenance = {});

}  // namespace hsa
