#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "hrcopt/common.hpp"

namespace hrcopt {

/// Diagonal translational impedance (virtual mass / damper / spring).
struct ImpedanceParams {
  Eigen::Vector3d mass = Eigen::Vector3d::Ones();
  Eigen::Vector3d damping = Eigen::Vector3d::Zero();
  Eigen::Vector3d stiffness = Eigen::Vector3d::Ones();

  void validate() const {
    if ((mass.array() <= 0).any() || (damping.array() <= 0).any() ||
        (stiffness.array() <= 0).any())
      throw ConfigError("impedance: mass, damping and stiffness must be positive");
  }
};

/// d = 2 sqrt(m k) per axis: fastest non-overshooting second-order response.
inline Eigen::Vector3d critical_damping(const Eigen::Vector3d& mass,
                                        const Eigen::Vector3d& stiffness) {
  return 2.0 * (mass.array() * stiffness.array()).sqrt();
}

inline ImpedanceParams critically_damped(const Eigen::Vector3d& mass,
                                         const Eigen::Vector3d& stiffness) {
  ImpedanceParams p;
  p.mass = mass;
  p.stiffness = stiffness;
  p.damping = critical_damping(mass, stiffness);
  return p;
}

struct ImpedanceState {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();       // current EE position
  Eigen::Vector3d xdot = Eigen::Vector3d::Zero();    // controller velocity state
  Eigen::Vector3d x_d = Eigen::Vector3d::Zero();     // desired position
  Eigen::Vector3d xdot_d = Eigen::Vector3d::Zero();  // desired velocity
  Eigen::Vector3d f_ext = Eigen::Vector3d::Zero();   // external force
};

/// One Euler step of M xdd + D (xd - xd_d) + K (x - x_d) = f. Returns the
/// commanded translational velocity and stores it back as the new velocity
/// state.
inline Eigen::Vector3d impedance_step(ImpedanceState& s, const ImpedanceParams& p, double dt) {
  if (!(dt > 0.0)) throw ConfigError("impedance_step: dt must be positive");
  const Eigen::Array3d xdd = (s.f_ext.array() - p.damping.array() * (s.xdot - s.xdot_d).array() -
                              p.stiffness.array() * (s.x - s.x_d).array()) /
                             p.mass.array();
  s.xdot += (xdd * dt).matrix();
  return s.xdot;
}

/// Proportional orientation regulation. Returns the angular velocity pulling
/// `current` toward `reference`, clamped to 1 rad/s. Handles the quaternion
/// double cover.
inline Eigen::Vector3d orientation_hold(const Eigen::Quaterniond& current,
                                        const Eigen::Quaterniond& reference, double gain) {
  Eigen::Quaterniond err = reference * current.conjugate();
  if (err.w() < 0.0) err.coeffs() = -err.coeffs();
  const Eigen::AngleAxisd aa(err);
  Eigen::Vector3d omega = gain * aa.angle() * aa.axis();
  const double norm = omega.norm();
  if (norm > 1.0) omega *= 1.0 / norm;
  return omega;
}

}  // namespace hrcopt
