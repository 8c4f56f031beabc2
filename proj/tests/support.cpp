#include "support.hpp"

namespace hrcopt::test {

namespace {

// Home postures solved offline for the 0.15 m-link chain:
// manufacturing reaches (0.48, 0, 0.35) in the base frame, recovery holds a
// retracted (0.30, 0, 0.30).
Eigen::VectorXd manufacturing_home() {
  return (Eigen::VectorXd(7) << 0.0, 0.230796, 0.0, 1.22087, 0.0, 1.30193, 0.0).finished();
}

Eigen::VectorXd recovery_home() {
  return (Eigen::VectorXd(7) << 0.0, 0.14714, 0.0, 1.41428, 0.0, 1.52671, 0.0).finished();
}

RobotSpec manufacturing_robot(const std::string& name, double bearing, double base_radius,
                              const Eigen::Vector3d& stiffness) {
  RobotSpec spec;
  const Eigen::Vector3d base(base_radius * std::cos(bearing), base_radius * std::sin(bearing),
                             0.0);
  const double yaw = bearing + M_PI;  // face the recovery base at the origin
  spec.model = generic_arm(name, base, yaw);
  spec.role = RobotRole::manufacturing;
  spec.home = manufacturing_home();
  spec.impedance = critically_damped(Eigen::Vector3d::Ones(), stiffness);
  const Eigen::Vector3d center = forward_kinematics(spec.model, spec.home).position;
  const Eigen::Vector3d lateral =
      spec.model.base_pose.orientation * Eigen::Vector3d::UnitY();
  for (int k = 0; k < 4; ++k) {
    const double a = 2.0 * M_PI * k / 4;
    // waypoint ring in the robot's lateral-vertical plane (faces its cell)
    spec.waypoints.push_back(center +
                             0.15 * (std::cos(a) * lateral + std::sin(a) * Eigen::Vector3d::UnitZ()));
  }
  return spec;
}

RobotSpec recovery_robot() {
  RobotSpec spec;
  spec.model = generic_arm("recovery", {0.0, 0.0, 0.0}, 0.0);
  spec.role = RobotRole::recovery;
  spec.home = recovery_home();
  spec.impedance = critically_damped(Eigen::Vector3d::Ones(), {40.0, 40.0, 20.0});
  return spec;
}

void add_default_prior(SceneConfig& scene, const Eigen::Vector3d& fixed_point) {
  // drops concentrate left and right of the fixed manufacturing point,
  // slightly toward the recovery side and below, flattened vertically
  const Eigen::Vector3d left = fixed_point + Eigen::Vector3d(-0.06, 0.20, -0.06);
  const Eigen::Vector3d right = fixed_point + Eigen::Vector3d(-0.06, -0.20, -0.06);
  scene.prior.components = {{0.5, left, {0.0025, 0.0025, 0.0001}},
                            {0.5, right, {0.0025, 0.0025, 0.0001}}};
  scene.prior.workspace_min = {fixed_point.x() - 0.16, -0.38, left.z() - 0.03};
  scene.prior.workspace_max = {fixed_point.x() + 0.04, 0.38, left.z() + 0.03};
}

}  // namespace

SceneConfig preliminary_scene(double dt) {
  SceneConfig scene;
  scene.dt = dt;
  scene.trial_timeout = 60.0;
  scene.reach_tol = 0.02;

  scene.robots = {manufacturing_robot("manufacturing_1", 0.0, 1.1, {30.0, 30.0, 10.0}),
                  recovery_robot()};
  const Eigen::Vector3d fixed_point =
      forward_kinematics(scene.robots[0].model, scene.robots[0].home).position;
  add_default_prior(scene, fixed_point);

  scene.normalize_order();
  scene.validate();
  return scene;
}

SceneConfig main_scene(double dt) {
  SceneConfig scene;
  scene.dt = dt;
  scene.trial_timeout = 60.0;
  scene.reach_tol = 0.02;

  const double arc = 35.0 * M_PI / 180.0;
  scene.robots = {
      manufacturing_robot("manufacturing_1", -arc, 1.1, {7.5, 7.5, 2.5}),
      manufacturing_robot("manufacturing_2", 0.0, 1.1, {15.0, 15.0, 5.0}),
      manufacturing_robot("manufacturing_3", arc, 1.1, {30.0, 30.0, 10.0}),
      recovery_robot()};
  const Eigen::Vector3d fixed_point =
      forward_kinematics(scene.robots[1].model, scene.robots[1].home).position;
  add_default_prior(scene, fixed_point);

  scene.normalize_order();
  scene.validate();
  return scene;
}

}  // namespace hrcopt::test
