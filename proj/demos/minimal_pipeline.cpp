// Minimal end-to-end library walkthrough: build a two-robot scene in code,
// collect a small dataset, fit the surrogates, optimize the threshold, and
// re-simulate the optimum. Mirrors what the CLI does from config files.

#include <iostream>

#include "hrcopt/ga.hpp"
#include "hrcopt/gp.hpp"
#include "hrcopt/simulator.hpp"

using namespace hrcopt;

namespace {

RobotModel make_arm(const std::string& name, const Eigen::Vector3d& base, double yaw) {
  RobotModel m;
  m.name = name;
  m.base_pose.position = base;
  m.base_pose.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
  for (int j = 0; j < 7; ++j) {
    JointDescriptor jd;
    jd.axis = (j % 2 == 0) ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
    jd.link = Pose::translation(0.0, 0.0, 0.15);
    m.joints.push_back(jd);
  }
  m.ee_offset = Pose::translation(0.0, 0.0, 0.15);
  m.qdot_min = Eigen::VectorXd::Constant(7, -2.0);
  m.qdot_max = Eigen::VectorXd::Constant(7, 2.0);
  return m;
}

}  // namespace

int main() {
  SceneConfig scene;
  scene.dt = 0.01;  // coarse tick keeps the demo fast
  scene.trial_timeout = 30.0;
  scene.reach_tol = 0.02;

  RobotSpec manufacturing;
  manufacturing.model = make_arm("manufacturing", {1.1, 0.0, 0.0}, M_PI);
  manufacturing.role = RobotRole::manufacturing;
  manufacturing.home =
      (Eigen::VectorXd(7) << 0.0, 0.9, 0.0, 1.2, 0.0, -0.8, 0.0).finished();
  manufacturing.impedance = critically_damped({1, 1, 1}, {15, 15, 5});
  const Eigen::Vector3d center =
      forward_kinematics(manufacturing.model, manufacturing.home).position;
  for (int k = 0; k < 4; ++k) {
    const double a = 2.0 * M_PI * k / 4;
    manufacturing.waypoints.push_back(center +
                                      0.15 * Eigen::Vector3d(0.0, std::cos(a), std::sin(a)));
  }

  RobotSpec recovery;
  recovery.model = make_arm("recovery", {0.0, 0.0, 0.0}, 0.0);
  recovery.role = RobotRole::recovery;
  recovery.home = (Eigen::VectorXd(7) << 0.0, 0.9, 0.0, 1.2, 0.0, -0.8, 0.0).finished();
  recovery.impedance = critically_damped({1, 1, 1}, {40, 40, 20});

  scene.robots = {manufacturing, recovery};
  scene.prior.components = {
      {0.5, center + Eigen::Vector3d(-0.10, 0.20, -0.05), {0.0025, 0.0025, 0.0001}},
      {0.5, center + Eigen::Vector3d(-0.10, -0.20, -0.05), {0.0025, 0.0025, 0.0001}}};
  scene.prior.workspace_min = center + Eigen::Vector3d(-0.35, -0.40, -0.15);
  scene.prior.workspace_max = center + Eigen::Vector3d(0.15, 0.40, 0.15);
  scene.validate();

  std::cout << "collecting 12 samples x 8 trials...\n";
  const auto rows = collect_dataset(scene, 12, 8, /*seed=*/7, /*jobs=*/0);

  Eigen::MatrixXd x(rows.size(), 1);
  Eigen::VectorXd y_product(rows.size()), y_risk(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x(static_cast<int>(i), 0) = rows[i].thresholds[0];
    y_product[static_cast<int>(i)] = rows[i].x_product;
    y_risk[static_cast<int>(i)] = rows[i].x_risk;
  }
  const GpModel f_product = fit_gp(x, y_product);
  const GpModel f_risk = fit_gp(x, y_risk);

  GaConfig ga;
  ga.seed = 11;
  const double t_lim = f_risk.predict(Eigen::VectorXd::Constant(1, 0.25)).first;
  const auto result = optimize_thresholds(
      [&](const Eigen::VectorXd& q) { return f_product.predict(q).first; },
      [&](const Eigen::VectorXd& q) { return f_risk.upper_bound(q, 0.0); }, t_lim,
      scene.priority.l_max, 1, ga);

  std::cout << "t_lim " << t_lim << " -> l_bar* = " << result.thresholds_star[0]
            << (result.feasible ? "" : " (infeasible)") << "\n";

  const auto check = evaluate_solution(scene, result.thresholds_star, 20, /*seed=*/23, 0);
  std::cout << "realized productivity " << check.x_product << ", risk " << check.x_risk << " s\n";
  return 0;
}
