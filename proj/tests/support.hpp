#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's computation paths: forward kinematics is
// re-derived with homogeneous matrices, the QP oracle enumerates active sets,
// and GP posteriors are recomputed with dense solves.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "hrcopt/common.hpp"
#include "hrcopt/gp.hpp"
#include "hrcopt/kinematics.hpp"
#include "hrcopt/prior.hpp"
#include "hrcopt/qp.hpp"
#include "hrcopt/simulator.hpp"

namespace hrcopt::test {

// --------------------------------------------------------------------------
// Model builders
// --------------------------------------------------------------------------

inline RobotModel planar_two_link() {
  RobotModel m;
  m.name = "planar2";
  JointDescriptor j1;
  j1.axis = Eigen::Vector3d::UnitZ();
  JointDescriptor j2;
  j2.axis = Eigen::Vector3d::UnitZ();
  j2.link = Pose::translation(1.0, 0.0, 0.0);
  m.joints = {j1, j2};
  m.ee_offset = Pose::translation(1.0, 0.0, 0.0);
  m.qdot_min = Eigen::VectorXd::Constant(2, -10.0);
  m.qdot_max = Eigen::VectorXd::Constant(2, 10.0);
  return m;
}

/// The default experiment chain: alternating Z/Y axes, 0.15 m links.
inline RobotModel generic_arm(const std::string& name, const Eigen::Vector3d& base, double yaw,
                              int dof = 7) {
  RobotModel m;
  m.name = name;
  m.base_pose.position = base;
  m.base_pose.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
  for (int j = 0; j < dof; ++j) {
    JointDescriptor jd;
    jd.axis = (j % 2 == 0) ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
    jd.link = Pose::translation(0.0, 0.0, 0.15);
    m.joints.push_back(jd);
  }
  m.ee_offset = Pose::translation(0.0, 0.0, 0.15);
  m.qdot_min = Eigen::VectorXd::Constant(dof, -3.0);
  m.qdot_max = Eigen::VectorXd::Constant(dof, 3.0);
  return m;
}

inline RobotModel random_chain(Rng& rng, int max_dof = 10) {
  const int dof = 1 + static_cast<int>(rng.uniform_index(max_dof));
  RobotModel m;
  m.name = "random";
  m.base_pose.position = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
  m.base_pose.orientation =
      Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
  for (int j = 0; j < dof; ++j) {
    JointDescriptor jd;
    jd.axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    jd.link.position = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
    jd.link.orientation =
        Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    m.joints.push_back(jd);
  }
  m.ee_offset.position = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
  m.qdot_min = Eigen::VectorXd::Constant(dof, -2.0);
  m.qdot_max = Eigen::VectorXd::Constant(dof, 2.0);
  return m;
}

inline Eigen::VectorXd random_q(Rng& rng, int dof, double range = M_PI) {
  Eigen::VectorXd q(dof);
  for (int i = 0; i < dof; ++i) q[i] = rng.uniform(-range, range);
  return q;
}

// --------------------------------------------------------------------------
// Forward-kinematics oracle: homogeneous 4x4 transform chain
// --------------------------------------------------------------------------

inline Eigen::Matrix4d to_homogeneous(const Pose& p) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = p.orientation.toRotationMatrix();
  t.topRightCorner<3, 1>() = p.position;
  return t;
}

inline Eigen::Matrix4d rotation_about(const Eigen::Vector3d& axis, double angle) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  const Eigen::Vector3d a = axis.normalized();
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  t.topLeftCorner<3, 3>() =
      Eigen::Matrix3d::Identity() * c + (1 - c) * a * a.transpose() + s * k;
  return t;
}

inline Eigen::Matrix4d fk_oracle(const RobotModel& m, const Eigen::VectorXd& q) {
  Eigen::Matrix4d t = to_homogeneous(m.base_pose);
  for (int j = 0; j < m.dof(); ++j)
    t = t * to_homogeneous(m.joints[j].link) * rotation_about(m.joints[j].axis, q[j]);
  return t * to_homogeneous(m.ee_offset);
}

// --------------------------------------------------------------------------
// Finite-difference Jacobian oracle
// --------------------------------------------------------------------------

inline Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian_fd_oracle(const RobotModel& m,
                                                                   const Eigen::VectorXd& q,
                                                                   double h = 1e-6) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, m.dof());
  for (int j = 0; j < m.dof(); ++j) {
    Eigen::VectorXd qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    const Pose fp = forward_kinematics(m, qp);
    const Pose fm = forward_kinematics(m, qm);
    jac.col(j).head<3>() = (fp.position - fm.position) / (2.0 * h);
    Eigen::Quaterniond dq = fp.orientation * fm.orientation.conjugate();
    if (dq.w() < 0) dq.coeffs() = -dq.coeffs();
    const Eigen::AngleAxisd aa(dq);
    jac.col(j).tail<3>() = aa.angle() * aa.axis() / (2.0 * h);
  }
  return jac;
}

// --------------------------------------------------------------------------
// QP oracle: enumerate active sets, solve each KKT system, keep the feasible
// minimum. Exact for strictly convex problems.
// --------------------------------------------------------------------------

struct QpOracleResult {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  bool feasible_found = false;
};

inline double qp_objective(const QpProblem& p, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(p.H * x) + p.g.dot(x);
}

inline bool qp_feasible(const QpProblem& p, const Eigen::VectorXd& x, double tol = 1e-8) {
  for (int i = 0; i < p.dim(); ++i)
    if (x[i] < p.lb[i] - tol || x[i] > p.ub[i] + tol) return false;
  for (int i = 0; i < p.n_ineq(); ++i)
    if (p.C.row(i).dot(x) < p.c_lower[i] - tol) return false;
  return true;
}

/// Enumerates box states (lower/free/upper per variable, pruned to finite
/// bounds) x subsets of the inequality rows. Tractable for the test sizes.
inline QpOracleResult qp_active_set_oracle(const QpProblem& p) {
  const int n = p.dim();
  const int k = p.n_ineq();
  QpOracleResult best;

  std::vector<int> box_state(n, 0);  // 0 free, 1 lower, 2 upper
  std::vector<long> strides(n);
  long combos = 1;
  for (int i = 0; i < n; ++i) {
    const int options = 1 + (std::isfinite(p.lb[i]) ? 1 : 0) + (std::isfinite(p.ub[i]) ? 1 : 0);
    strides[i] = combos;
    combos *= options;
  }

  for (long combo = 0; combo < combos; ++combo) {
    long rest = combo;
    for (int i = 0; i < n; ++i) {
      const int options = 1 + (std::isfinite(p.lb[i]) ? 1 : 0) + (std::isfinite(p.ub[i]) ? 1 : 0);
      int s = static_cast<int>(rest % options);
      rest /= options;
      if (s == 1 && !std::isfinite(p.lb[i])) s = 2;  // only ub finite
      box_state[i] = s;
    }
    for (long mask = 0; mask < (1L << k); ++mask) {
      std::vector<Eigen::RowVectorXd> rows;
      std::vector<double> rhs;
      for (int i = 0; i < n; ++i) {
        if (box_state[i] == 0) continue;
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        e[i] = 1.0;
        rows.push_back(e);
        rhs.push_back(box_state[i] == 1 ? p.lb[i] : p.ub[i]);
      }
      for (int r = 0; r < k; ++r) {
        if (!(mask & (1L << r))) continue;
        rows.push_back(p.C.row(r));
        rhs.push_back(p.c_lower[r]);
      }
      const int na = static_cast<int>(rows.size());
      if (na > n) continue;
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
      kkt.topLeftCorner(n, n) = p.H;
      Eigen::VectorXd b(n + na);
      b.head(n) = -p.g;
      for (int r = 0; r < na; ++r) {
        kkt.block(0, n + r, n, 1) = rows[r].transpose();
        kkt.block(n + r, 0, 1, n) = rows[r];
        b[n + r] = rhs[r];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd x = lu.solve(b).head(n);
      if (!qp_feasible(p, x)) continue;
      const double obj = qp_objective(p, x);
      if (obj < best.objective) {
        best.objective = obj;
        best.x = x;
        best.feasible_found = true;
      }
    }
  }
  return best;
}

/// Random strictly convex QP. `finite_boxes` keeps every bound finite (full
/// box enumeration); otherwise boxes are wide and effectively inactive.
inline QpProblem random_qp(Rng& rng, int dim, int n_ineq, bool finite_boxes) {
  QpProblem p;
  Eigen::MatrixXd b(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
  p.H = b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
  p.g.resize(dim);
  for (int i = 0; i < dim; ++i) p.g[i] = rng.normal();
  p.lb.resize(dim);
  p.ub.resize(dim);
  for (int i = 0; i < dim; ++i) {
    if (finite_boxes) {
      const double c = rng.uniform(-0.5, 0.5);
      const double w = rng.uniform(0.2, 1.0);
      p.lb[i] = c - w;
      p.ub[i] = c + w;
    } else {
      // unbounded variables: the oracle then enumerates only the C rows
      p.lb[i] = -std::numeric_limits<double>::infinity();
      p.ub[i] = std::numeric_limits<double>::infinity();
    }
  }
  p.C.resize(n_ineq, dim);
  p.c_lower.resize(n_ineq);
  for (int r = 0; r < n_ineq; ++r) {
    for (int j = 0; j < dim; ++j) p.C(r, j) = rng.normal();
    p.c_lower[r] = rng.uniform(-1.0, 0.5);
  }
  return p;
}

// --------------------------------------------------------------------------
// Dense GP posterior oracle
// --------------------------------------------------------------------------

inline std::pair<double, double> gp_dense_oracle(const GpModel& m, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd& xt = m.train_x();
  const int n = static_cast<int>(xt.rows());
  const auto& h = m.hyper();
  auto kern = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd d = (a - b).array() / h.lengthscales.array();
    return h.signal_variance * std::exp(-0.5 * d.square().sum());
  };
  Eigen::MatrixXd kmat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kmat(i, j) = kern(xt.row(i).transpose(), xt.row(j).transpose());
  kmat.diagonal().array() += h.noise_variance;
  Eigen::VectorXd ks(n);
  for (int i = 0; i < n; ++i) ks[i] = kern(xt.row(i).transpose(), x);
  const Eigen::VectorXd y_std = (m.train_y().array() - m.y_mean()) / m.y_scale();
  // direct dense inverse, no Cholesky reuse
  const Eigen::MatrixXd kinv = kmat.inverse();
  const double mu = ks.dot(kinv * y_std);
  const double var = h.signal_variance + h.noise_variance - ks.dot(kinv * ks);
  return {m.y_mean() + m.y_scale() * mu, m.y_scale() * std::sqrt(std::max(var, 0.0))};
}

// --------------------------------------------------------------------------
// Direct GMM sampler (validation oracle for the MH chain)
// --------------------------------------------------------------------------

inline Eigen::Vector3d direct_gmm_sample(const PriorDistribution& prior, Rng& rng) {
  for (;;) {
    double u = rng.uniform();
    std::size_t c = 0;
    for (; c + 1 < prior.components.size(); ++c) {
      if (u < prior.components[c].weight) break;
      u -= prior.components[c].weight;
    }
    Eigen::Vector3d x;
    for (int a = 0; a < 3; ++a)
      x[a] = prior.components[c].mean[a] +
             std::sqrt(prior.components[c].variance[a]) * rng.normal();
    if (prior.in_workspace(x)) return x;
  }
}

// --------------------------------------------------------------------------
// Reference scenes
// --------------------------------------------------------------------------

/// Two-robot scene (one manufacturing, one recovery) facing each other.
/// `dt` defaults to the coarse CI tick.
SceneConfig preliminary_scene(double dt = 0.01);

/// Four-robot scene (three manufacturing on an arc, one recovery).
SceneConfig main_scene(double dt = 0.01);

}  // namespace hrcopt::test
