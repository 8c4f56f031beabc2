#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hrcopt/common.hpp"

namespace hrcopt {

struct GmmComponent {
  double weight = 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d variance = Eigen::Vector3d::Ones();  // diagonal covariance
};

/// Gaussian-mixture prior over dropped-object positions, truncated to an
/// axis-aligned workspace box.
struct PriorDistribution {
  std::vector<GmmComponent> components;
  Eigen::Vector3d workspace_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d workspace_max = Eigen::Vector3d::Constant(1.0);

  bool in_workspace(const Eigen::Vector3d& x) const {
    return (x.array() >= workspace_min.array()).all() &&
           (x.array() <= workspace_max.array()).all();
  }

  void validate() const {
    if (components.empty()) throw ConfigError("prior: needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw ConfigError("prior: component weights must be positive");
      if ((c.variance.array() <= 0.0).any())
        throw ConfigError("prior: component variances must be positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("prior: weights must sum to 1");
    if ((workspace_min.array() >= workspace_max.array()).any())
      throw ConfigError("prior: empty workspace box");
  }
};

/// log sum_c w_c N(x; mu_c, Sigma_c), evaluated in the log domain.
inline double gmm_logpdf(const Eigen::Vector3d& x, const PriorDistribution& prior) {
  constexpr double log_2pi = 1.8378770664093453;
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(prior.components.size());
  for (std::size_t c = 0; c < prior.components.size(); ++c) {
    const auto& comp = prior.components[c];
    const Eigen::Array3d d = (x - comp.mean).array();
    const double quad = (d.square() / comp.variance.array()).sum();
    const double log_det = comp.variance.array().log().sum();
    terms[c] = std::log(comp.weight) - 0.5 * (3.0 * log_2pi + log_det + quad);
    max_term = std::max(max_term, terms[c]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

struct MhConfig {
  double proposal_std = 0.05;
  int burn_in = 500;
  int thinning = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(proposal_std > 0.0)) throw ConfigError("mh: proposal_std must be positive");
    if (burn_in < 0) throw ConfigError("mh: burn_in must be >= 0");
    if (thinning < 1) throw ConfigError("mh: thinning must be >= 1");
  }
};

/// Random-walk Metropolis chain over the truncated mixture. The chain starts
/// from a uniform draw inside the workspace box; proposals leaving the box
/// are rejected so the box acts as a hard truncation of the target.
class MhChain {
public:
  MhChain(PriorDistribution prior, MhConfig cfg) : prior_(std::move(prior)), cfg_(cfg), rng_(cfg.seed) {
    prior_.validate();
    cfg_.validate();
    for (int a = 0; a < 3; ++a)
      state_[a] = rng_.uniform(prior_.workspace_min[a], prior_.workspace_max[a]);
    state_logp_ = gmm_logpdf(state_, prior_);
  }

  void warm_up() {
    if (warmed_) return;
    for (int i = 0; i < cfg_.burn_in; ++i) advance_one();
    warmed_ = true;
  }

  /// Next thinned state. Warms the chain on first use.
  Eigen::Vector3d next() {
    warm_up();
    for (int i = 0; i < cfg_.thinning; ++i) advance_one();
    return state_;
  }

  long proposals() const { return proposals_; }
  long accepts() const { return accepts_; }
  double acceptance_rate() const {
    return proposals_ > 0 ? static_cast<double>(accepts_) / static_cast<double>(proposals_) : 1.0;
  }

private:
  void advance_one() {
    Eigen::Vector3d prop = state_;
    for (int a = 0; a < 3; ++a) prop[a] += cfg_.proposal_std * rng_.normal();
    ++proposals_;
    if (!prior_.in_workspace(prop)) return;  // truncation: stay put
    const double logp = gmm_logpdf(prop, prior_);
    if (logp >= state_logp_ || rng_.uniform() < std::exp(logp - state_logp_)) {
      state_ = prop;
      state_logp_ = logp;
      ++accepts_;
    }
  }

  PriorDistribution prior_;
  MhConfig cfg_;
  Rng rng_;
  Eigen::Vector3d state_;
  double state_logp_ = 0.0;
  bool warmed_ = false;
  long proposals_ = 0;
  long accepts_ = 0;
};

/// Draw n samples with a fresh chain. Raises TuningError when the acceptance
/// rate collapses below 1% once at least 10 n proposals have been made.
inline std::vector<Eigen::Vector3d> mh_sample(const PriorDistribution& prior, int n,
                                              const MhConfig& cfg) {
  if (n < 1) throw ConfigError("mh_sample: n must be >= 1");
  MhChain chain(prior, cfg);
  chain.warm_up();
  std::vector<Eigen::Vector3d> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(chain.next());
    if (chain.proposals() >= 10L * n && chain.acceptance_rate() < 0.01)
      throw TuningError("mh_sample: acceptance rate below 1%, adjust proposal_std");
  }
  return out;
}

/// Next drop position from a warmed chain; always inside the workspace box.
inline Eigen::Vector3d sample_drop_position(MhChain& chain) { return chain.next(); }

}  // namespace hrcopt
