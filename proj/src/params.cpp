#include "hsa/params.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hsa/error.hpp"
#include "material_sources.hpp"

namespace hsa {

namespace {

using nlohmann::json;

double number(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  const json& v = node.at(key);
  if (!v.is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
  return v.get<double>();
}

void only_keys(const json& node, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

const json& section(const json& root, const char* key) {
  if (!root.contains(key) || !root.at(key).is_object()) {
    throw ConfigError(std::string("material: missing section '") + key + "'");
  }
  return root.at(key);
}

std::array<int, 2> sign_pair(const json& node, const char* key, std::array<int, 2> fallback) {
  if (!node.contains(key)) return fallback;
  const json& v = node.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError(std::string("geometry: '") + key + "' must be a 2-element array");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool all_finite(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

void HsaParams::validate() const {
  geom.validate();
  const auto& k = stiffness;
  require(all_finite({rod_linear_density, rod_rotational_inertia_density, platform_mass,
                      platform_inertia, gravity.x(), gravity.y(), c_eps, k.S_be_hat, k.C_S_be,
                      k.S_sh_hat, k.C_S_sh, k.S_ax_hat, k.C_S_ax, k.S_b_sh, damping.zeta_be,
                      damping.zeta_sh, damping.zeta_ax, phi_max}) &&
              rest_strain.finite(),
          "material '" + name + "': non-finite parameter");
  require(rod_linear_density > 0.0, "material '" + name + "': rod_linear_density must be > 0");
  require(platform_mass > 0.0, "material '" + name + "': platform_mass must be > 0");
  require(rod_rotational_inertia_density >= 0.0,
          "material '" + name + "': rod_rotational_inertia_density must be >= 0");
  require(platform_inertia >= 0.0, "material '" + name + "': platform_inertia must be >= 0");
  require(damping.zeta_be >= 0.0 && damping.zeta_sh >= 0.0 && damping.zeta_ax >= 0.0,
          "material '" + name + "': damping coefficients must be >= 0");
  require(phi_max > 0.0, "material '" + name + "': phi_max must be > 0");
  require(quadrature_order >= 1 && quadrature_order <= 64,
          "material '" + name + "': quadrature_order must be in [1, 64]");
  require(rest_strain.sigma_ax > -1.0, "material '" + name + "': rest sigma_ax must be > -1");

  // Axial stiffness at both ends of the actuation range: never negative and not zero
  // at both ends (the EPU law is zero at phi = 0 and grows with twist).
  for (std::size_t i = 0; i < BackboneGeometry::kNumRods; ++i) {
    const double twist0 = 0.0;
    const double twist1 = geom.handedness[i] * phi_max / geom.l0;
    const double s0 = k.S_ax_hat + k.C_S_ax * twist0;
    const double s1 = k.S_ax_hat + k.C_S_ax * twist1;
    require(s0 >= 0.0 && s1 >= 0.0 && s0 + s1 > 0.0,
            "material '" + name + "': axial stiffness must be non-negative over [0, phi_max]"
            " and positive somewhere");
  }
}

HsaParams params_from_json_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("material: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("material: top level must be an object");

  only_keys(root,
            {"name", "geometry", "mass", "gravity", "rest_strain", "elongation", "stiffness", "damping",
             "phi_max", "quadrature_order", "provenance"},
            "material");
  HsaParams p;
  try {
    p.name = root.value("name", std::string("custom"));
    const json& g = section(root, "geometry");
    only_keys(g, {"l0", "r_off", "handedness", "rod_offset_sign"}, "geometry");
    p.geom.l0 = number(g, "l0", "geometry");
    p.geom.r_off = number(g, "r_off", "geometry");
    p.geom.handedness = sign_pair(g, "handedness", {1, 1});
    p.geom.offset_sign = sign_pair(g, "rod_offset_sign", {-1, 1});

    const json& m = section(root, "mass");
    only_keys(m, {"rod_linear_density", "rod_rotational_inertia_density", "platform_mass", "platform_inertia"},
              "mass");
    p.rod_linear_density = number(m, "rod_linear_density", "mass");
    p.rod_rotational_inertia_density = number(m, "rod_rotational_inertia_density", "mass");
    p.platform_mass = number(m, "platform_mass", "mass");
    p.platform_inertia = number(m, "platform_inertia", "mass");

    const json& grav = root.at("gravity");
    if (!grav.is_array() || grav.size() != 2) throw ConfigError("gravity must be a 2-vector");
    p.gravity = {grav[0].get<double>(), grav[1].get<double>()};

    const json& rest = section(root, "rest_strain");
    only_keys(rest, {"kappa_be", "sigma_sh", "sigma_ax"}, "rest_strain");
    p.rest_strain = {number(rest, "kappa_be", "rest_strain"), number(rest, "sigma_sh", "rest_strain"),
                     number(rest, "sigma_ax", "rest_strain")};

    only_keys(section(root, "elongation"), {"C_eps"}, "elongation");
    p.c_eps = number(section(root, "elongation"), "C_eps", "elongation");

    const json& s = section(root, "stiffness");
    only_keys(s, {"S_be_hat", "C_S_be", "S_sh_hat", "C_S_sh", "S_ax_hat", "C_S_ax", "S_b_sh"}, "stiffness");
    p.stiffness = {number(s, "S_be_hat", "stiffness"), number(s, "C_S_be", "stiffness"),
                   number(s, "S_sh_hat", "stiffness"), number(s, "C_S_sh", "stiffness"),
                   number(s, "S_ax_hat", "stiffness"), number(s, "C_S_ax", "stiffness"),
                   number(s, "S_b_sh", "stiffness")};

    const json& d = section(root, "damping");
    only_keys(d, {"zeta_be", "zeta_sh", "zeta_ax"}, "damping");
    p.damping = {number(d, "zeta_be", "damping"), number(d, "zeta_sh", "damping"),
                 number(d, "zeta_ax", "damping")};

    p.phi_max = number(root, "phi_max", "material");
    p.quadrature_order = root.value("quadrature_order", 5);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("material: ") + e.what());
  }
  p.validate();
  return p;
}

HsaParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open material file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return params_from_json_text(buffer.str());
}

HsaParams fpu_params() { return params_from_json_text(detail::kFpuMaterialJson); }
HsaParams epu_params() { return params_from_json_text(detail::kEpuMaterialJson); }

HsaParams resolve_material(const std::string& material) {
  if (material == "fpu" || material == "FPU") return fpu_params();
  if (material == "epu" || material == "EPU") return epu_params();
  return load_params(material);
}

std::string params_to_json_text(const HsaParams& p, const std::string& provenance) {
  json root;
  root["name"] = p.name;
  root["geometry"] = {{"l0", p.geom.l0},
                      {"r_off", p.geom.r_off},
                      {"handedness", p.geom.handedness},
                      {"rod_offset_sign", p.geom.offset_sign}};
  root["mass"] = {{"rod_linear_density", p.rod_linear_density},
                  {"rod_rotational_inertia_density", p.rod_rotational_inertia_density},
                  {"platform_mass", p.platform_mass},
                  {"platform_inertia", p.platform_inertia}};
  root["gravity"] = {p.gravity.x(), p.gravity.y()};
  root["rest_strain"] = {{"kappa_be", p.rest_strain.kappa_be},
                         {"sigma_sh", p.rest_strain.sigma_sh},
                         {"sigma_ax", p.rest_strain.sigma_ax}};
  root["elongation"] = {{"C_eps", p.c_eps}};
  root["stiffness"] = {{"S_be_hat", p.stiffness.S_be_hat}, {"C_S_be", p.stiffness.C_S_be},
                       {"S_sh_hat", p.stiffness.S_sh_hat}, {"C_S_sh", p.stiffness.C_S_sh},
                       {"S_ax_hat", p.stiffness.S_ax_hat}, {"C_S_ax", p.stiffness.C_S_ax},
                       {"S_b_sh", p.stiffness.S_b_sh}};
  root["damping"] = {{"zeta_be", p.damping.zeta_be},
                     {"zeta_sh", p.damping.zeta_sh},
                     {"zeta_ax", p.damping.zeta_ax}};
  root["phi_max"] = p.phi_max;
  root["quadrature_order"] = p.quadrature_order;
  if (!provenance.empty()) root["provenance"] = {{"source", provenance}};
  return root.dump(2) + "\n";
}

}  // namespace hsa
