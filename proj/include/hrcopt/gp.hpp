#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "hrcopt/common.hpp"

namespace hrcopt {

struct GpHyper {
  Eigen::VectorXd lengthscales;  // per input dimension
  double signal_variance = 1.0;
  double noise_variance = 0.1;
};

struct GpFitOptions {
  int restarts = 8;
  int max_iter = 200;
  double grad_tol = 1e-6;
  double noise_floor = 1e-6;  // lower bound on the (standardized) noise variance
  std::uint64_t seed = 0;
};

/// Gaussian-process regressor with an RBF kernel and per-dimension
/// lengthscales. Targets are standardized internally; predictions are
/// returned in the original units. Immutable after fit.
class GpModel {
public:
  GpModel() = default;

  static GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const GpFitOptions& opt = {});

  /// Posterior mean and standard deviation (noise-inclusive) at one point.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    if (x.size() != x_.cols()) throw ConfigError("gp predict: input dimension mismatch");
    if (!x.allFinite()) throw ConfigError("gp predict: non-finite input");
    const int n = static_cast<int>(x_.rows());
    Eigen::VectorXd k_star(n);
    for (int i = 0; i < n; ++i) k_star[i] = kernel(x_.row(i).transpose(), x);
    const double mu_std = k_star.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k_star);
    const double var_std = hyper_.signal_variance + hyper_.noise_variance - v.squaredNorm();
    const double sigma_std = std::sqrt(std::max(var_std, 0.0));
    return {y_mean_ + y_scale_ * mu_std, y_scale_ * sigma_std};
  }

  /// Confidence-inflated prediction mu + zeta * sigma.
  double upper_bound(const Eigen::VectorXd& x, double zeta) const {
    if (zeta < 0.0) throw ConfigError("gp upper_bound: zeta must be >= 0");
    const auto [mu, sigma] = predict(x);
    return mu + zeta * sigma;
  }

  double log_marginal_likelihood() const { return lml_; }
  const std::vector<double>& restart_initial_lml() const { return restart_initial_lml_; }
  const GpHyper& hyper() const { return hyper_; }
  const Eigen::MatrixXd& train_x() const { return x_; }
  Eigen::VectorXd train_y() const { return (y_mean_ + y_scale_ * y_std_.array()).matrix(); }
  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }
  int dim() const { return static_cast<int>(x_.cols()); }

  /// Rebuild a model from stored hyperparameters and training data; used by
  /// the serialization layer. Predictions are identical to the fitted model.
  static GpModel restore(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& hyper,
                         double lml) {
    GpModel m;
    m.x_ = x;
    m.y_mean_ = y.mean();
    const double var = (y.array() - m.y_mean_).square().sum() / y.size();
    m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    m.y_std_ = (y.array() - m.y_mean_) / m.y_scale_;
    m.hyper_ = hyper;
    m.lml_ = lml;
    m.refresh_factorization();
    return m;
  }

private:
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const Eigen::ArrayXd d = (a - b).array() / hyper_.lengthscales.array();
    return hyper_.signal_variance * std::exp(-0.5 * d.square().sum());
  }

  void refresh_factorization() {
    const int n = static_cast<int>(x_.rows());
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const double v = kernel(x_.row(i).transpose(), x_.row(j).transpose());
        k(i, j) = v;
        k(j, i) = v;
      }
    k.diagonal().array() += hyper_.noise_variance;
    // escalate the stability jitter only when the clean factorization fails,
    // so tiny noise floors still interpolate
    bool ok = false;
    for (double jitter : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      llt_.compute(kj);
      if (llt_.info() == Eigen::Success) {
        ok = true;
        break;
      }
    }
    if (!ok) throw FitError("gp: covariance factorization failed");
    alpha_ = llt_.solve(y_std_);
  }

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  GpHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  std::vector<double> restart_initial_lml_;
};

namespace detail {

/// Log marginal likelihood and its gradient in log-parameter space.
/// theta = (log l_1..d, log sf2, log sn2) on standardized targets.
class GpObjective {
public:
  GpObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) : x_(x), y_(y) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    sq_dist_.resize(d);
    for (int k = 0; k < d; ++k) {
      sq_dist_[k].resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double diff = x(i, k) - x(j, k);
          sq_dist_[k](i, j) = diff * diff;
        }
    }
  }

  /// Returns LML; grad filled when non-null. -inf on factorization failure.
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const int n = static_cast<int>(x_.rows());
    const int d = static_cast<int>(x_.cols());
    const Eigen::VectorXd ell2 = (2.0 * theta.head(d)).array().exp();
    const double sf2 = std::exp(theta[d]);
    const double sn2 = std::exp(theta[d + 1]);

    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < d; ++k) quad += sq_dist_[k] / ell2[k];
    const Eigen::MatrixXd r = (-0.5 * quad.array()).exp().matrix();
    Eigen::MatrixXd kmat = sf2 * r;
    kmat.diagonal().array() += sn2 + 1e-10;

    Eigen::LLT<Eigen::MatrixXd> llt(kmat);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y_);
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
    const double lml = -0.5 * y_.dot(alpha) - log_det - 0.5 * n * std::log(2.0 * M_PI);

    if (grad) {
      grad->resize(d + 2);
      const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
      const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;  // dLML = 1/2 tr(w dK)
      for (int k = 0; k < d; ++k) {
        const Eigen::MatrixXd dk = (sf2 * r.array() * sq_dist_[k].array() / ell2[k]).matrix();
        (*grad)[k] = 0.5 * w.cwiseProduct(dk).sum();
      }
      (*grad)[d] = 0.5 * w.cwiseProduct(sf2 * r).sum();
      (*grad)[d + 1] = 0.5 * sn2 * w.trace();
    }
    return lml;
  }

private:
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  std::vector<Eigen::MatrixXd> sq_dist_;
};

}  // namespace detail

inline GpModel GpModel::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const GpFitOptions& opt) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 2) throw FitError("gp fit: need at least 2 rows");
  if (y.size() != n) throw FitError("gp fit: X/y row mismatch");
  if (!x.allFinite() || !y.allFinite()) throw FitError("gp fit: non-finite inputs");
  bool all_same = true;
  for (int i = 1; i < n && all_same; ++i) all_same = (x.row(i) - x.row(0)).norm() < 1e-15;
  if (all_same) throw FitError("gp fit: degenerate inputs (all rows identical)");

  GpModel m;
  m.x_ = x;
  m.y_mean_ = y.mean();
  const double var = (y.array() - m.y_mean_).square().sum() / n;
  m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  m.y_std_ = (y.array() - m.y_mean_) / m.y_scale_;

  // Bounds in log space: lengthscales relative to the per-dimension input
  // range, noise within [floor, var(y_std) = 1].
  Eigen::VectorXd lo(d + 2), hi(d + 2);
  for (int k = 0; k < d; ++k) {
    double range = x.col(k).maxCoeff() - x.col(k).minCoeff();
    if (range <= 0.0) range = 1.0;
    lo[k] = std::log(0.01 * range);
    hi[k] = std::log(5.0 * range);
  }
  lo[d] = std::log(1e-4);
  hi[d] = std::log(1e4);
  lo[d + 1] = std::log(opt.noise_floor);
  hi[d + 1] = std::log(1.0);

  detail::GpObjective objective(m.x_, m.y_std_);
  const auto clip = [&](Eigen::VectorXd v) {
    return v.cwiseMax(lo).cwiseMin(hi).eval();
  };

  double best_lml = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  Rng rng(derive_seed(opt.seed, 0x99a2ULL));

  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    Eigen::VectorXd theta(d + 2);
    if (restart == 0) {
      // deterministic first start: mid-range lengthscales, unit signal
      for (int k = 0; k < d; ++k) theta[k] = 0.5 * (lo[k] + hi[k]);
      theta[d] = 0.0;
      theta[d + 1] = std::log(std::max(opt.noise_floor, 0.1));
    } else {
      for (int k = 0; k < d + 2; ++k) theta[k] = rng.uniform(lo[k], hi[k]);
    }
    theta = clip(theta);

    Eigen::VectorXd grad;
    double lml = objective.eval(theta, &grad);
    m.restart_initial_lml_.push_back(lml);
    double step = 0.1;
    for (int it = 0; it < opt.max_iter && std::isfinite(lml); ++it) {
      if (grad.cwiseAbs().maxCoeff() < opt.grad_tol) break;
      bool improved = false;
      for (int bt = 0; bt < 30; ++bt) {
        const Eigen::VectorXd cand = clip(theta + step * grad);
        Eigen::VectorXd cand_grad;
        const double cand_lml = objective.eval(cand, &cand_grad);
        if (cand_lml > lml) {
          theta = cand;
          lml = cand_lml;
          grad = cand_grad;
          step *= 1.5;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    if (lml > best_lml) {
      best_lml = lml;
      best_theta = theta;
    }
  }
  if (!std::isfinite(best_lml)) throw FitError("gp fit: likelihood optimization failed");

  // The likelihood is nearly flat close to the noise floor; snap onto it when
  // that does not hurt, so noiseless data actually interpolates.
  {
    Eigen::VectorXd snapped = best_theta;
    snapped[d + 1] = lo[d + 1];
    const double snapped_lml = objective.eval(snapped, nullptr);
    if (snapped_lml >= best_lml) {
      best_theta = snapped;
      best_lml = snapped_lml;
    }
  }

  m.hyper_.lengthscales = best_theta.head(d).array().exp();
  m.hyper_.signal_variance = std::exp(best_theta[d]);
  m.hyper_.noise_variance = std::exp(best_theta[d + 1]);
  m.lml_ = best_lml;
  m.refresh_factorization();
  return m;
}

inline GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const GpFitOptions& opt = {}) {
  return GpModel::fit(x, y, opt);
}

inline std::pair<double, double> predict(const GpModel& m, const Eigen::VectorXd& x) {
  return m.predict(x);
}

/// Eq-style confidence bound mu(x) + zeta * sigma(x).
inline double risk_bound(const GpModel& m, const Eigen::VectorXd& x, double zeta) {
  return m.upper_bound(x, zeta);
}

}  // namespace hrcopt
