#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hrcopt/common.hpp"

namespace hrcopt {

/// Convex QP:  min 1/2 x'Hx + g'x  s.t.  lb <= x <= ub,  C x >= c_lower.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb, ub;
  Eigen::MatrixXd C;        // k x n, k may be 0
  Eigen::VectorXd c_lower;  // k

  int dim() const { return static_cast<int>(g.size()); }
  int n_ineq() const { return static_cast<int>(c_lower.size()); }

  void validate() const {
    const int n = dim();
    if (H.rows() != n || H.cols() != n) throw ConfigError("qp: H must be n x n");
    if (lb.size() != n || ub.size() != n) throw ConfigError("qp: bound length != n");
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw ConfigError("qp: H is not symmetric");
    for (int i = 0; i < n; ++i)
      if (!(lb[i] <= ub[i])) throw ConfigError("qp: lb > ub at index " + std::to_string(i));
    if (C.rows() != n_ineq() || (C.rows() > 0 && C.cols() != n))
      throw ConfigError("qp: C shape mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8 * scale)
      throw ConfigError("qp: H is not positive semidefinite");
  }
};

enum class QpStatus { optimal, max_iter, infeasible };

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::max_iter;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct QpSettings {
  double eps = 1e-6;  // used as both absolute and relative tolerance
  int max_iter = 4000;
  double sigma = 1e-6;
  double alpha = 1.6;
  double rho0 = 0.1;
  int check_interval = 10;
  int rho_interval = 50;
  double eps_infeasible = 1e-5;
  bool polish = true;
  bool validate = true;
};

/// Operator-splitting QP solver with adaptive penalty and optional active-set
/// polish. Box constraints are kept implicit (identity rows are never
/// materialized), which keeps control-rate solves cheap. One instance per
/// control context: solve() warm-starts from the previous call when the
/// dimensions match.
class AdmmQpSolver {
public:
  explicit AdmmQpSolver(QpSettings settings = {}) : settings_(settings) {}

  void reset() { warm_ = false; }

  QpSolution solve(const QpProblem& p) {
    if (settings_.validate) p.validate();
    const int n = p.dim();
    const int k = p.n_ineq();

    // Diagonal equilibration: x = s .* x^, C rows scaled by e, cost by c_cost.
    Eigen::VectorXd s(n);
    for (int j = 0; j < n; ++j)
      s[j] = 1.0 / std::sqrt(std::clamp(std::abs(p.H(j, j)), 1e-8, 1e16));
    Eigen::MatrixXd ch(k, n);  // scaled C
    Eigen::VectorXd e(k);
    for (int r = 0; r < k; ++r) {
      ch.row(r) = p.C.row(r).cwiseProduct(s.transpose());
      e[r] = 1.0 / std::max(ch.row(r).cwiseAbs().maxCoeff(), 1e-8);
      ch.row(r) *= e[r];
    }
    Eigen::MatrixXd hh = s.asDiagonal() * p.H * s.asDiagonal();
    Eigen::VectorXd gh = s.cwiseProduct(p.g);
    const double c_cost = 1.0 / std::max(1.0, gh.cwiseAbs().maxCoeff());
    hh *= c_cost;
    gh *= c_cost;
    const Eigen::VectorXd lbh = scale_bound(p.lb, s, true);
    const Eigen::VectorXd ubh = scale_bound(p.ub, s, true);
    const Eigen::VectorXd clh = e.cwiseProduct(p.c_lower);

    // Warm start carried in original coordinates.
    Eigen::VectorXd xh, zxh, zch, yxh, ych;
    if (warm_ && x_warm_.size() == n && yc_warm_.size() == k) {
      xh = x_warm_.cwiseQuotient(s);
      zxh = zx_warm_.cwiseQuotient(s);
      zch = e.cwiseProduct(zc_warm_);
      yxh = c_cost * s.cwiseProduct(yx_warm_);
      ych = (c_cost * yc_warm_).cwiseQuotient(e);
    } else {
      xh = Eigen::VectorXd::Zero(n);
      zxh = Eigen::VectorXd::Zero(n);
      zch = Eigen::VectorXd::Zero(k);
      yxh = Eigen::VectorXd::Zero(n);
      ych = Eigen::VectorXd::Zero(k);
      rho_ = settings_.rho0;
    }
    if (!(rho_ > 1e-6 && rho_ < 1e6)) rho_ = settings_.rho0;

    auto factorize = [&](double rho) {
      Eigen::MatrixXd m = hh + rho * (k > 0 ? (ch.transpose() * ch).eval()
                                            : Eigen::MatrixXd::Zero(n, n));
      m.diagonal().array() += settings_.sigma + rho;
      return Eigen::LDLT<Eigen::MatrixXd>(m);
    };
    Eigen::LDLT<Eigen::MatrixXd> kkt = factorize(rho_);

    QpSolution sol;
    sol.x = s.cwiseProduct(xh);
    Eigen::VectorXd yx_prev = yxh.cwiseQuotient(s) / c_cost;  // original space
    Eigen::VectorXd yc_prev = e.cwiseProduct(ych) / c_cost;

    Eigen::VectorXd xt(n), rhs(n), vx(n), yx(n);
    Eigen::VectorXd vc(k), yc(k), cx(k);

    int iter = 0;
    for (iter = 1; iter <= settings_.max_iter; ++iter) {
      rhs = settings_.sigma * xh - gh + (rho_ * zxh - yxh);
      if (k > 0) rhs.noalias() += ch.transpose() * (rho_ * zch - ych);
      xt = kkt.solve(rhs);
      const double am = settings_.alpha;
      xh = am * xt + (1.0 - am) * xh;
      vx = am * xt + (1.0 - am) * zxh + yxh / rho_;
      zxh = vx.cwiseMax(lbh).cwiseMin(ubh);
      yxh = rho_ * (vx - zxh);
      if (k > 0) {
        vc = am * (ch * xt) + (1.0 - am) * zch + ych / rho_;
        zch = vc.cwiseMax(clh);
        ych = rho_ * (vc - zch);
      }

      if (iter % settings_.check_interval != 0 && iter != settings_.max_iter) continue;

      // Termination is decided on the equilibrated problem: the diagonal
      // scaling normalizes the weakly damped directions, so a relative
      // tolerance there is meaningful even when H spans many decades.
      const Eigen::VectorXd hx = hh * xh;
      double r_prim = (xh - zxh).cwiseAbs().maxCoeff();
      double prim_scale = std::max(xh.cwiseAbs().maxCoeff(), zxh.cwiseAbs().maxCoeff());
      Eigen::VectorXd dual_vec = hx + gh + yxh;
      double aty_scale = yxh.cwiseAbs().maxCoeff();
      if (k > 0) {
        cx.noalias() = ch * xh;
        r_prim = std::max(r_prim, (cx - zch).cwiseAbs().maxCoeff());
        prim_scale = std::max({prim_scale, cx.cwiseAbs().maxCoeff(), zch.cwiseAbs().maxCoeff()});
        const Eigen::VectorXd ctyc = ch.transpose() * ych;
        dual_vec.noalias() += ctyc;
        aty_scale = std::max(aty_scale, ctyc.cwiseAbs().maxCoeff());
      }
      const double r_dual = dual_vec.cwiseAbs().maxCoeff();
      const double dual_scale =
          std::max({hx.cwiseAbs().maxCoeff(), aty_scale, gh.cwiseAbs().maxCoeff()});
      const double eps_prim = settings_.eps + settings_.eps * prim_scale;
      const double eps_dual = settings_.eps + settings_.eps * dual_scale;

      sol.x = s.cwiseProduct(xh);
      sol.primal_residual = r_prim;
      sol.dual_residual = r_dual;
      sol.iterations = iter;

      if (r_prim <= eps_prim && r_dual <= eps_dual) {
        sol.status = QpStatus::optimal;
        break;
      }

      yx = yxh.cwiseQuotient(s) / c_cost;
      if (k > 0) yc = e.cwiseProduct(ych) / c_cost;
      if (primal_infeasibility_certificate(p, yx - yx_prev, k > 0 ? (yc - yc_prev).eval()
                                                                  : Eigen::VectorXd())) {
        sol.status = QpStatus::infeasible;
        break;
      }
      yx_prev = yx;
      if (k > 0) yc_prev = yc;

      if (iter % settings_.rho_interval == 0) {
        const double ratio = std::sqrt((r_prim / std::max(prim_scale, 1e-8)) /
                                       std::max(r_dual / std::max(dual_scale, 1e-8), 1e-16));
        const double rho_new = std::clamp(rho_ * ratio, 1e-6, 1e6);
        if (rho_new > 5.0 * rho_ || rho_new < rho_ / 5.0) {
          rho_ = rho_new;
          kkt = factorize(rho_);
        }
      }
    }
    if (sol.status == QpStatus::max_iter) sol.iterations = settings_.max_iter;

    if (sol.status == QpStatus::optimal && settings_.polish)
      polish(p, yxh.cwiseQuotient(s) / c_cost, k > 0 ? (e.cwiseProduct(ych) / c_cost).eval()
                                                     : Eigen::VectorXd(), sol);

    x_warm_ = s.cwiseProduct(xh);
    zx_warm_ = s.cwiseProduct(zxh);
    yx_warm_ = yxh.cwiseQuotient(s) / c_cost;
    if (k > 0) {
      zc_warm_ = zch.cwiseQuotient(e);
      yc_warm_ = e.cwiseProduct(ych) / c_cost;
    } else {
      zc_warm_.resize(0);
      yc_warm_.resize(0);
    }
    warm_ = true;
    return sol;
  }

private:
  static Eigen::VectorXd scale_bound(const Eigen::VectorXd& b, const Eigen::VectorXd& s,
                                     bool divide) {
    Eigen::VectorXd out(b.size());
    for (int i = 0; i < b.size(); ++i)
      out[i] = std::isfinite(b[i]) ? (divide ? b[i] / s[i] : b[i] * s[i]) : b[i];
    return out;
  }

  /// OSQP-style certificate: a dual direction dy with A'dy ~ 0 whose support
  /// lies on finite bounds and whose bound inner product is negative proves
  /// the constraint set empty.
  bool primal_infeasibility_certificate(const QpProblem& p, const Eigen::VectorXd& dyx,
                                        const Eigen::VectorXd& dyc) const {
    const int n = p.dim();
    const int k = p.n_ineq();
    double dy_norm = dyx.cwiseAbs().maxCoeff();
    if (k > 0) dy_norm = std::max(dy_norm, dyc.cwiseAbs().maxCoeff());
    if (!(dy_norm > 1e-12)) return false;
    const double tol = settings_.eps_infeasible * dy_norm;

    Eigen::VectorXd at_dy = dyx;
    if (k > 0) at_dy.noalias() += p.C.transpose() * dyc;
    if (at_dy.cwiseAbs().maxCoeff() > tol) return false;

    double gap = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pos = std::max(dyx[i], 0.0);
      const double neg = std::min(dyx[i], 0.0);
      if (std::isfinite(p.ub[i]))
        gap += p.ub[i] * pos;
      else if (pos > tol)
        return false;
      if (std::isfinite(p.lb[i]))
        gap += p.lb[i] * neg;
      else if (-neg > tol)
        return false;
    }
    for (int r = 0; r < k; ++r) {
      // C rows are one-sided ranges [c_lower, inf)
      if (dyc[r] > tol) return false;
      gap += p.c_lower[r] * std::min(dyc[r], 0.0);
    }
    return gap < -tol;
  }

  void polish(const QpProblem& p, const Eigen::VectorXd& yx, const Eigen::VectorXd& yc,
              QpSolution& sol) const {
    const int n = p.dim();
    const int k = p.n_ineq();
    std::vector<int> fixed;       // variables pinned at a box bound
    std::vector<double> fixed_at;
    std::vector<int> free_vars;
    for (int i = 0; i < n; ++i) {
      if (yx[i] < -1e-10 && std::isfinite(p.lb[i])) {
        fixed.push_back(i);
        fixed_at.push_back(p.lb[i]);
      } else if (yx[i] > 1e-10 && std::isfinite(p.ub[i])) {
        fixed.push_back(i);
        fixed_at.push_back(p.ub[i]);
      } else {
        free_vars.push_back(i);
      }
    }
    std::vector<int> act_rows;
    for (int r = 0; r < k; ++r)
      if (yc[r] < -1e-10) act_rows.push_back(r);

    const int nf = static_cast<int>(free_vars.size());
    const int na = static_cast<int>(act_rows.size());
    Eigen::VectorXd x(n);
    for (std::size_t i = 0; i < fixed.size(); ++i) x[fixed[i]] = fixed_at[i];

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + na, nf + na);
    Eigen::VectorXd rhs(nf + na);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) kkt(a, b) = p.H(free_vars[a], free_vars[b]);
      double acc = -p.g[free_vars[a]];
      for (std::size_t i = 0; i < fixed.size(); ++i)
        acc -= p.H(free_vars[a], fixed[i]) * fixed_at[i];
      rhs[a] = acc;
    }
    for (int r = 0; r < na; ++r) {
      for (int a = 0; a < nf; ++a) {
        kkt(nf + r, a) = p.C(act_rows[r], free_vars[a]);
        kkt(a, nf + r) = -p.C(act_rows[r], free_vars[a]);  // lower-active: -C' lambda
      }
      double acc = p.c_lower[act_rows[r]];
      for (std::size_t i = 0; i < fixed.size(); ++i)
        acc -= p.C(act_rows[r], fixed[i]) * fixed_at[i];
      rhs[nf + r] = acc;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol_kkt = lu.solve(rhs);
    for (int a = 0; a < nf; ++a) x[free_vars[a]] = sol_kkt[a];

    // residuals of the polished candidate
    double r_prim = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lb[i])) r_prim = std::max(r_prim, p.lb[i] - x[i]);
      if (std::isfinite(p.ub[i])) r_prim = std::max(r_prim, x[i] - p.ub[i]);
    }
    Eigen::VectorXd dual = p.H * x + p.g;
    for (std::size_t i = 0; i < fixed.size(); ++i) dual[fixed[i]] = 0.0;  // bound multiplier
    for (int r = 0; r < na; ++r) {
      dual.noalias() -= p.C.row(act_rows[r]).transpose() * sol_kkt[nf + r];
    }
    if (k > 0) {
      const Eigen::VectorXd cx = p.C * x;
      for (int r = 0; r < k; ++r) r_prim = std::max(r_prim, p.c_lower[r] - cx[r]);
    }
    const double r_dual = dual.cwiseAbs().maxCoeff();
    if (std::max(r_prim, r_dual) < std::max(sol.primal_residual, sol.dual_residual)) {
      sol.x = x;
      sol.primal_residual = std::max(r_prim, 0.0);
      sol.dual_residual = r_dual;
    }
  }

  QpSettings settings_;
  bool warm_ = false;
  double rho_ = 0.1;
  Eigen::VectorXd x_warm_, zx_warm_, zc_warm_, yx_warm_, yc_warm_;
};

/// Cold-start convenience wrapper.
inline QpSolution solve_qp(const QpProblem& p, double tol = 1e-6, int max_iter = 4000) {
  QpSettings settings;
  settings.eps = tol;
  settings.max_iter = max_iter;
  AdmmQpSolver solver(settings);
  return solver.solve(p);
}

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

/// KKT residual norms at an arbitrary point. Multipliers on the active rows
/// are recovered by least squares and clamped to the correct sign.
inline KktResidual kkt_residual(const QpProblem& p, const Eigen::VectorXd& x) {
  const int n = p.dim();
  const int k = p.n_ineq();
  if (x.size() != n) throw ConfigError("kkt_residual: x length mismatch");
  const double inf = std::numeric_limits<double>::infinity();

  const int m = n + k;
  Eigen::MatrixXd a(m, n);
  a.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  if (k > 0) a.bottomRows(k) = p.C;
  Eigen::VectorXd l(m), u(m);
  l.head(n) = p.lb;
  u.head(n) = p.ub;
  if (k > 0) {
    l.tail(k) = p.c_lower;
    u.tail(k).setConstant(inf);
  }
  const Eigen::VectorXd ax = a * x;

  KktResidual res;
  for (int i = 0; i < m; ++i) {
    if (std::isfinite(l[i])) res.primal = std::max(res.primal, l[i] - ax[i]);
    if (std::isfinite(u[i])) res.primal = std::max(res.primal, ax[i] - u[i]);
  }

  const double act_tol = 1e-7;
  std::vector<int> act;
  std::vector<double> sign;  // +1 for upper bound active (y >= 0), -1 for lower
  for (int i = 0; i < m; ++i) {
    const double scale = 1.0 + std::abs(ax[i]);
    if (std::isfinite(u[i]) && std::abs(ax[i] - u[i]) <= act_tol * scale) {
      act.push_back(i);
      sign.push_back(1.0);
    } else if (std::isfinite(l[i]) && std::abs(ax[i] - l[i]) <= act_tol * scale) {
      act.push_back(i);
      sign.push_back(-1.0);
    }
  }
  const Eigen::VectorXd grad = p.H * x + p.g;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (!act.empty()) {
    Eigen::MatrixXd at(n, act.size());
    for (std::size_t r = 0; r < act.size(); ++r) at.col(r) = a.row(act[r]).transpose();
    Eigen::VectorXd y_act = at.colPivHouseholderQr().solve(-grad);
    for (std::size_t r = 0; r < act.size(); ++r) {
      const double v = y_act[static_cast<int>(r)];
      y[act[r]] = sign[r] > 0 ? std::max(v, 0.0) : std::min(v, 0.0);
    }
  }
  res.stationarity = (grad + a.transpose() * y).norm();
  for (int i = 0; i < m; ++i) {
    double slack = inf;
    if (std::isfinite(l[i])) slack = std::min(slack, std::abs(ax[i] - l[i]));
    if (std::isfinite(u[i])) slack = std::min(slack, std::abs(ax[i] - u[i]));
    if (std::isfinite(slack)) res.complementarity = std::max(res.complementarity, std::abs(y[i]) * slack);
  }
  return res;
}

}  // namespace hrcopt
