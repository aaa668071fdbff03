#include <doctest.h>

#include <cmath>

#include "hsa/error.hpp"
#include "hsa/kinematics.hpp"
#include "oracles.hpp"

using namespace hsa;

namespace {

BackboneGeometry geometry() { return BackboneGeometry{}; }

// Rod labelling with rod 1 on the +r_off side.
BackboneGeometry plus_first() {
  BackboneGeometry g;
  g.offset_sign = {1, -1};
  return g;
}

}  // namespace

TEST_CASE("straight backbone ends at (0, l0) with zero orientation") {
  const PlanarPose chi = forward_kinematics({0.0, 0.0, 0.0}, 0.059, geometry());
  CHECK(chi.p_x == doctest::Approx(0.0));
  CHECK(chi.p_y == doctest::Approx(0.059));
  CHECK(chi.theta == doctest::Approx(0.0));
}

TEST_CASE("orientation of the clockwise bending extreme") {
  const PlanarPose chi = forward_kinematics({-11.2, 0.08, 0.30}, 0.059, geometry());
  CHECK(chi.theta == doctest::Approx(-0.6608).epsilon(1e-4));
}

TEST_CASE("closed form matches the integrated strain ODE") {
  oracle::Sampler rnd(11);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Configuration q = rnd.config();
    const double s = rnd.uniform(0.0, 0.059);
    const Eigen::Vector3d ref = oracle::integrate_pose(q, s);
    worst = std::max(worst, (forward_kinematics(q, s, geometry()).vec() - ref).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("forward kinematics is smooth through zero curvature") {
  for (double kappa : {1e-9, -3e-7, 9.9e-6, 1.1e-5, 5e-3}) {
    const Configuration q{kappa, 0.05, 0.2};
    const Eigen::Vector3d ref = oracle::integrate_pose(q, 0.059);
    CHECK((forward_kinematics(q, 0.059, geometry()).vec() - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward kinematics rejects bad input") {
  CHECK_THROWS_AS(forward_kinematics({NAN, 0.0, 0.0}, 0.01, geometry()), InvalidArgument);
  CHECK_THROWS_AS(forward_kinematics({0.0, 0.0, 0.0}, -0.01, geometry()), InvalidArgument);
  CHECK_THROWS_AS(forward_kinematics({0.0, 0.0, 0.0}, 0.1, geometry()), InvalidArgument);
}

TEST_CASE("inverse kinematics of the straight pose") {
  const Configuration q = inverse_kinematics({0.0, 0.059, 0.0}, 0.059);
  CHECK(q.kappa_be == doctest::Approx(0.0));
  CHECK(q.sigma_sh == doctest::Approx(0.0));
  CHECK(q.sigma_ax == doctest::Approx(0.0));
  CHECK_THROWS_AS(inverse_kinematics({0.0, 0.059, 0.0}, 0.0), InvalidArgument);
}

TEST_CASE("inverse kinematics approaches its limit continuously as theta -> 0") {
  // Limit: kappa -> 0, sigma_sh -> p_x / s, sigma_ax -> p_y / s - 1.
  const double s = 0.059, px = 0.004, py = 0.07;
  for (double theta : {0.0, 1e-12, 1e-8, -5e-7}) {
    const Configuration q = inverse_kinematics({px, py, theta}, s);
    CHECK(q.sigma_sh == doctest::Approx(px / s + theta * py / (2 * s)).epsilon(1e-12));
    CHECK(q.sigma_ax == doctest::Approx(py / s - 1.0 - theta * px / (2 * s)).epsilon(1e-12));
  }
  // both sides of any small-angle switch reproduce the pose exactly
  for (double theta : {0.999e-6, 1.001e-6, -0.999e-4, 1.001e-4, 0.999e-2, 1.001e-2}) {
    const PlanarPose chi{px, py, theta};
    const PlanarPose back = forward_kinematics(inverse_kinematics(chi, s), s, geometry());
    CHECK((back.vec() - chi.vec()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("round trip through forward and inverse kinematics") {
  oracle::Sampler rnd(12);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Configuration q = rnd.config();
    if (k % 4 == 0) q.kappa_be = rnd.uniform(-1e-6, 1e-6);
    const Configuration back = inverse_kinematics(end_effector_pose(q, geometry()), 0.059);
    worst = std::max(worst, (back.vec() - q.vec()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("rod strains follow the lateral offsets") {
  const BackboneGeometry g = plus_first();
  const Configuration straight = rod_strains({0.0, 0.0, 0.3}, 0, g);
  CHECK(straight.sigma_ax == doctest::Approx(0.3));
  const Configuration r1 = rod_strains({2.0, 0.0, 0.3}, 0, g);
  const Configuration r2 = rod_strains({2.0, 0.0, 0.3}, 1, g);
  CHECK(r1.kappa_be == 2.0);
  CHECK(r1.sigma_ax == doctest::Approx(0.348));
  CHECK(r2.sigma_ax == doctest::Approx(0.252));
  CHECK_THROWS_AS(rod_strains({0.0, 0.0, 0.0}, 2, g), InvalidArgument);
}

TEST_CASE("rod strain Jacobian") {
  BackboneGeometry centred = plus_first();
  centred.r_off = 0.0;
  CHECK(rod_strain_jacobian(0, centred).isApprox(Eigen::Matrix3d::Identity()));

  const BackboneGeometry g = plus_first();
  Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
  expected(2, 0) = 0.024;
  CHECK(rod_strain_jacobian(0, g).isApprox(expected));

  oracle::Sampler rnd(13);
  for (std::size_t rod = 0; rod < 2; ++rod) {
    const Eigen::Vector3d q = rnd.config().vec();
    const Eigen::MatrixXd fd = oracle::jacobian(
        [&](const Eigen::Vector3d& v) -> Eigen::VectorXd { return rod_strains(Configuration::from(v), rod, g).vec(); },
        q, 1e-6);
    CHECK((fd - rod_strain_jacobian(rod, g)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("end-effector Jacobian matches finite differences") {
  oracle::Sampler rnd(14);
  for (int k = 0; k < 50; ++k) {
    Configuration q = rnd.config();
    if (k % 5 == 0) q.kappa_be = rnd.uniform(-1e-3, 1e-3);
    const Eigen::MatrixXd fd = oracle::jacobian(
        [&](const Eigen::Vector3d& v) -> Eigen::VectorXd {
          return end_effector_pose(Configuration::from(v), geometry()).vec();
        },
        q.vec(), 1e-6);
    CHECK(oracle::rel_err(end_effector_jacobian(q, geometry()), fd) < 1e-7);
  }
}

TEST_CASE("twist-induced elongation") {
  CHECK(elongation(0.0, 1, 0.0098, 0.059) == 0.0);
  CHECK(elongation(3.40, 1, 0.0098, 0.059) == doctest::Approx(0.5647).epsilon(1e-4));
  CHECK(elongation(-1.0, -1, 0.0098, 0.059) == elongation(1.0, 1, 0.0098, 0.059));
}

TEST_CASE("geometry validation") {
  BackboneGeometry g;
  g.offset_sign = {1, 1};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = BackboneGeometry{};
  g.handedness = {1, 0};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = BackboneGeometry{};
  g.l0 = -1.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}
