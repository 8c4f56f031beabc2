#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hrcopt/kinematics.hpp"
#include "hrcopt/qp.hpp"

namespace hrcopt {

/// Velocity-damper collision parameters.
struct CollisionParams {
  double d_s = 0.10;  // security distance (m)
  double d_i = 0.15;  // influenced distance (m)
  double xi = 0.1;    // convergence gain

  void validate() const {
    if (!(0.0 < d_s && d_s < d_i)) throw ConfigError("collision: need 0 < d_s < d_i");
    if (!(xi > 0.0)) throw ConfigError("collision: xi must be positive");
  }
};

struct PriorityConfig {
  Eigen::VectorXd thresholds;  // per manufacturing robot, length N_m
  double l_max = 0.5;
  double w_o = 1.0e5;
  double gamma = 1.0e2;
  double epsilon = 1.0;  // joint-velocity damping weight

  void validate() const {
    for (int i = 0; i < thresholds.size(); ++i)
      if (thresholds[i] < 0.0 || thresholds[i] > l_max)
        throw ConfigError("priority: threshold out of [0, l_max] at index " + std::to_string(i));
    if (!(w_o > 0.0)) throw ConfigError("priority: w_o must be positive");
    if (!(gamma > 1.0)) throw ConfigError("priority: gamma must be > 1");
    if (!(epsilon > 0.0)) throw ConfigError("priority: epsilon must be positive");
  }
};

struct TaskCommand {
  int robot_index = 0;
  Eigen::Matrix<double, 6, 1> desired_twist = Eigen::Matrix<double, 6, 1>::Zero();
};

/// Binary priority switch: 0 keeps the manufacturing robot prioritized while
/// it is within `l_bar` of its own target, 1 hands priority to recovery.
inline int priority_value(double l, double l_bar) { return l < l_bar ? 0 : 1; }

/// Weight update for one tick. Order: manufacturing robots first (own p_i),
/// recovery last. The recovery weight follows the priority of the active pair
/// (nearest manufacturing robot within the influenced distance); with no
/// active pair the recovery robot keeps the boosted weight.
inline Eigen::VectorXd priority_weights(const std::vector<int>& p_per_robot,
                                        const PriorityConfig& cfg,
                                        std::optional<int> active_pair = std::nullopt) {
  const int n_m = static_cast<int>(p_per_robot.size());
  Eigen::VectorXd w(n_m + 1);
  for (int i = 0; i < n_m; ++i) w[i] = cfg.w_o * std::pow(cfg.gamma, 1.0 - p_per_robot[i]);
  const int p_star = active_pair ? p_per_robot.at(*active_pair) : 1;
  w[n_m] = cfg.w_o * std::pow(cfg.gamma, p_star);
  return w;
}

struct ConstraintRow {
  Eigen::RowVectorXd row;
  double lower = 0.0;
};

/// Velocity-damper row between a manufacturing and the recovery end effector:
/// n'(Jm - Jr) qdot >= -xi (d - d_s)/(d_i - d_s), translational blocks only.
/// Callers gate on d < d_i before emitting the row.
inline ConstraintRow collision_constraint(const Eigen::Vector3d& p_m, const Eigen::Vector3d& p_r,
                                          const Eigen::MatrixXd& jhat_m,
                                          const Eigen::MatrixXd& jhat_r,
                                          const CollisionParams& cp) {
  const Eigen::Vector3d diff = p_m - p_r;
  const double d = diff.norm();
  if (d <= 1e-9) throw ConfigError("collision_constraint: coincident end effectors");
  const Eigen::Vector3d n = diff / d;
  ConstraintRow out;
  out.row = n.transpose() * (jhat_m.topRows<3>() - jhat_r.topRows<3>());
  out.lower = -cp.xi * (d - cp.d_s) / (cp.d_i - cp.d_s);
  return out;
}

/// Weighted multi-robot differential-IK QP:
///   H = sum_i w_i Jhat_i' Jhat_i + eps I,  g = -sum_i w_i Jhat_i' xdot_i,
/// box bounds from per-robot velocity limits, one damper row per active pair.
inline QpProblem assemble_ik_qp(const std::vector<RobotModel>& models,
                                const Eigen::VectorXd& q_all,
                                const std::vector<TaskCommand>& commands,
                                const Eigen::VectorXd& weights, double epsilon,
                                const CollisionParams& cp,
                                const std::vector<std::pair<int, int>>& pairs) {
  const auto off = stacked_offsets(models);
  const int n = off.back();
  const int nr = static_cast<int>(models.size());
  if (static_cast<int>(commands.size()) != nr)
    throw ConfigError("assemble_ik_qp: one command per robot required");
  if (weights.size() != nr) throw ConfigError("assemble_ik_qp: weight length mismatch");

  std::vector<Eigen::MatrixXd> jac(nr);
  std::vector<Eigen::Vector3d> ee(nr);
  for (int i = 0; i < nr; ++i) {
    const Eigen::VectorXd qi = q_all.segment(off[i], models[i].dof());
    jac[i] = geometric_jacobian(models[i], qi);
    ee[i] = forward_kinematics(models[i], qi).position;
  }

  QpProblem p;
  p.H = epsilon * Eigen::MatrixXd::Identity(n, n);
  p.g = Eigen::VectorXd::Zero(n);
  p.lb.resize(n);
  p.ub.resize(n);
  for (int i = 0; i < nr; ++i) {
    const int o = off[i];
    const int ni = models[i].dof();
    p.H.block(o, o, ni, ni) += weights[i] * jac[i].transpose() * jac[i];
    p.g.segment(o, ni) -= weights[i] * jac[i].transpose() * commands[i].desired_twist;
    p.lb.segment(o, ni) = models[i].qdot_min;
    p.ub.segment(o, ni) = models[i].qdot_max;
  }

  // Damper rows written directly into the stacked layout: the normal hits
  // only the two robots' translational blocks, everything else stays zero.
  std::vector<std::pair<int, int>> active;
  for (const auto& [im, ir] : pairs) {
    const double d = (ee[im] - ee[ir]).norm();
    if (d <= 1e-9) throw ConfigError("assemble_ik_qp: coincident end effectors");
    if (d < cp.d_i) active.emplace_back(im, ir);  // inactive pairs omitted
  }
  p.C = Eigen::MatrixXd::Zero(active.size(), n);
  p.c_lower.resize(active.size());
  for (std::size_t r = 0; r < active.size(); ++r) {
    const auto [im, ir] = active[r];
    const Eigen::Vector3d diff = ee[im] - ee[ir];
    const double d = diff.norm();
    const Eigen::Vector3d normal = diff / d;
    const int row = static_cast<int>(r);
    p.C.row(row).segment(off[im], models[im].dof()) =
        normal.transpose() * jac[im].topRows<3>();
    p.C.row(row).segment(off[ir], models[ir].dof()) -=
        normal.transpose() * jac[ir].topRows<3>();
    p.c_lower[row] = -cp.xi * (d - cp.d_s) / (cp.d_i - cp.d_s);
  }
  return p;
}

/// Joint state and targets shared between the controllers and the IK layer.
struct WorldState {
  std::vector<Eigen::VectorXd> q;      // per robot
  std::vector<Eigen::VectorXd> qdot;   // last commanded, per robot
  std::vector<Pose> ee;                // refreshed from forward kinematics
  std::vector<Eigen::Vector3d> target;  // current target position per robot
};

enum class PriorityMode {
  thresholded,            // Eq. 5 switching on the per-robot thresholds
  always_recovery,        // p == 1 for every pair
  always_manufacturing,   // p == 0 for every pair
};

struct IkDiagnostics {
  std::vector<int> p;            // per manufacturing robot
  Eigen::VectorXd weights;       // manufacturing-first, recovery last
  std::optional<int> active_pair;
  int n_constraints = 0;
  QpStatus status = QpStatus::optimal;
  bool failsafe = false;
  double min_pair_distance = std::numeric_limits<double>::infinity();
};

/// Per-trial IK context: owns the warm-started QP solver. Robots are indexed
/// manufacturing-first with the recovery robot last.
class PriorityIkContext {
public:
  PriorityIkContext(std::vector<RobotModel> models, CollisionParams cp, PriorityConfig cfg,
                    double solver_tol = 1e-5, int solver_max_iter = 4000)
      : models_(std::move(models)), cp_(cp), cfg_(cfg) {
    cp_.validate();
    if (models_.size() < 2) throw ConfigError("priority ik: need >= 2 robots");
    n_m_ = static_cast<int>(models_.size()) - 1;
    if (cfg_.thresholds.size() != n_m_)
      throw ConfigError("priority ik: thresholds length != number of manufacturing robots");
    QpSettings s;
    s.eps = solver_tol;
    s.max_iter = solver_max_iter;
    s.validate = false;  // H is PSD by construction here
    s.polish = false;    // warm-started ticks hit tolerance without it
    solver_ = AdmmQpSolver(s);
    offsets_ = stacked_offsets(models_);
  }

  int total_dof() const { return offsets_.back(); }
  int recovery_index() const { return n_m_; }

  /// One control tick: evaluate priorities and weights, assemble the QP,
  /// solve warm-started, and return the stacked joint velocity command.
  Eigen::VectorXd step(const WorldState& state, const std::vector<TaskCommand>& commands,
                       PriorityMode mode = PriorityMode::thresholded,
                       IkDiagnostics* diag = nullptr) {
    const int nr = n_m_ + 1;
    Eigen::VectorXd q_all(total_dof());
    for (int i = 0; i < nr; ++i) q_all.segment(offsets_[i], models_[i].dof()) = state.q[i];

    IkDiagnostics local;
    local.p.resize(n_m_);
    for (int i = 0; i < n_m_; ++i) {
      const double l = (state.ee[i].position - state.target[i]).norm();
      switch (mode) {
        case PriorityMode::thresholded:
          local.p[i] = priority_value(l, cfg_.thresholds[i]);
          break;
        case PriorityMode::always_recovery:
          local.p[i] = 1;
          break;
        case PriorityMode::always_manufacturing:
          local.p[i] = 0;
          break;
      }
    }

    // Active pair: manufacturing robot nearest the recovery EE within d_i.
    const Eigen::Vector3d p_r = state.ee[n_m_].position;
    double best = cp_.d_i;
    for (int i = 0; i < n_m_; ++i) {
      const double d = (state.ee[i].position - p_r).norm();
      local.min_pair_distance = std::min(local.min_pair_distance, d);
      if (d < best) {
        best = d;
        local.active_pair = i;
      }
    }
    local.weights = priority_weights(local.p, cfg_, local.active_pair);

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_m_; ++i) pairs.emplace_back(i, n_m_);
    const QpProblem qp =
        assemble_ik_qp(models_, q_all, commands, local.weights, cfg_.epsilon, cp_, pairs);
    local.n_constraints = qp.n_ineq();

    const QpSolution sol = solver_.solve(qp);
    local.status = sol.status;
    Eigen::VectorXd qdot = sol.x;
    if (sol.status == QpStatus::infeasible) {
      qdot.setZero();  // conservative fail-safe: hold all joints
      local.failsafe = true;
      solver_.reset();
    } else {
      qdot = qdot.cwiseMax(qp.lb).cwiseMin(qp.ub);
    }
    if (diag) *diag = local;
    return qdot;
  }

  const std::vector<RobotModel>& models() const { return models_; }
  const std::vector<int>& offsets() const { return offsets_; }
  const PriorityConfig& config() const { return cfg_; }
  const CollisionParams& collision() const { return cp_; }

private:
  std::vector<RobotModel> models_;
  CollisionParams cp_;
  PriorityConfig cfg_;
  AdmmQpSolver solver_;
  std::vector<int> offsets_;
  int n_m_ = 0;
};

}  // namespace hrcopt
