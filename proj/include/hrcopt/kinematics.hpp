#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <string>
#include <vector>

#include "hrcopt/common.hpp"

namespace hrcopt {

/// Rigid transform as position + unit quaternion.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Pose() = default;
  Pose(const Eigen::Vector3d& p, const Eigen::Quaterniond& q) : position(p), orientation(q) {}

  static Pose translation(double x, double y, double z) {
    return Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond::Identity());
  }

  /// this ∘ other (apply `other` in this frame).
  Pose compose(const Pose& other) const {
    return Pose(position + orientation * other.position, orientation * other.orientation);
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return position + orientation * p; }
};

/// One revolute joint: fixed link transform applied first, then the rotation
/// about `axis` (unit vector in the post-link frame).
struct JointDescriptor {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Pose link;
};

struct RobotModel {
  std::string name;
  Pose base_pose;
  std::vector<JointDescriptor> joints;
  Pose ee_offset;  // tool transform after the last joint
  Eigen::VectorXd qdot_min, qdot_max;

  int dof() const { return static_cast<int>(joints.size()); }

  void validate() const {
    if (joints.empty()) throw ConfigError("robot '" + name + "': needs at least one joint");
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (std::abs(joints[j].axis.norm() - 1.0) > 1e-12)
        throw ConfigError("robot '" + name + "': joint " + std::to_string(j) +
                          " axis is not a unit vector");
    }
    if (qdot_min.size() != dof() || qdot_max.size() != dof())
      throw ConfigError("robot '" + name + "': velocity bound length != dof");
    for (int j = 0; j < dof(); ++j) {
      if (!(qdot_min[j] < qdot_max[j]))
        throw ConfigError("robot '" + name + "': qdot_min must be < qdot_max at joint " +
                          std::to_string(j));
    }
  }
};

namespace detail {

inline void check_joint_vector(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof())
    throw ConfigError("robot '" + model.name + "': joint vector length " +
                      std::to_string(q.size()) + " != dof " + std::to_string(model.dof()));
}

}  // namespace detail

inline Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
  detail::check_joint_vector(model, q);
  Pose t = model.base_pose;
  for (int j = 0; j < model.dof(); ++j) {
    t = t.compose(model.joints[j].link);
    t.orientation = t.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(q[j], model.joints[j].axis));
  }
  t = t.compose(model.ee_offset);
  t.orientation.normalize();
  return t;
}

/// Geometric Jacobian, 6 x n. Rows 0-2 translational, rows 3-5 angular;
/// column j = (z_j x (p_ee - p_j), z_j) with z_j the world-frame joint axis.
inline Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const RobotModel& model,
                                                                   const Eigen::VectorXd& q) {
  detail::check_joint_vector(model, q);
  const int n = model.dof();
  std::vector<Eigen::Vector3d> axis_world(n), origin(n);
  Pose t = model.base_pose;
  for (int j = 0; j < n; ++j) {
    t = t.compose(model.joints[j].link);
    axis_world[j] = t.orientation * model.joints[j].axis;
    origin[j] = t.position;
    t.orientation = t.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(q[j], model.joints[j].axis));
  }
  const Eigen::Vector3d p_ee = t.compose(model.ee_offset).position;

  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
  for (int j = 0; j < n; ++j) {
    jac.col(j).head<3>() = axis_world[j].cross(p_ee - origin[j]);
    jac.col(j).tail<3>() = axis_world[j];
  }
  return jac;
}

inline std::vector<int> stacked_offsets(const std::vector<RobotModel>& models) {
  std::vector<int> off(models.size() + 1, 0);
  for (std::size_t i = 0; i < models.size(); ++i) off[i + 1] = off[i] + models[i].dof();
  return off;
}

/// Jacobian of robot `i` placed in the stacked multi-robot coordinate layout:
/// zero except for robot i's own columns.
inline Eigen::MatrixXd augmented_jacobian(const std::vector<RobotModel>& models,
                                          const Eigen::VectorXd& q_all, std::size_t i) {
  if (i >= models.size()) throw ConfigError("augmented_jacobian: robot index out of range");
  const auto off = stacked_offsets(models);
  if (q_all.size() != off.back())
    throw ConfigError("augmented_jacobian: stacked joint vector length " +
                      std::to_string(q_all.size()) + " != total dof " + std::to_string(off.back()));
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(6, off.back());
  jac.middleCols(off[i], models[i].dof()) =
      geometric_jacobian(models[i], q_all.segment(off[i], models[i].dof()));
  return jac;
}

}  // namespace hrcopt
