#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "hrcopt/common.hpp"

namespace hrcopt {

struct GaConfig {
  int population_size = 64;
  int generations = 100;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;
  double mutation_std = 0.1;  // fraction of the box width
  int tournament_size = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 4 || population_size % 2 != 0)
      throw ConfigError("ga: population_size must be even and >= 4");
    if (generations < 1) throw ConfigError("ga: generations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
        mutation_rate > 1.0)
      throw ConfigError("ga: rates must be in [0, 1]");
    if (!(mutation_std > 0.0)) throw ConfigError("ga: mutation_std must be positive");
    if (tournament_size < 1) throw ConfigError("ga: tournament_size must be >= 1");
  }
};

struct GenerationTrace {
  double best_objective = 0.0;
  double best_violation = 0.0;
  bool best_feasible = false;
};

struct OptimizationResult {
  Eigen::VectorXd thresholds_star;
  double predicted_product = 0.0;
  double predicted_risk_bound = 0.0;
  bool feasible = false;
  std::vector<GenerationTrace> history;
};

using Predictor = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

struct GaIndividual {
  Eigen::VectorXd x;
  double objective = 0.0;
  double risk = 0.0;
  double violation = 0.0;  // max(0, risk - limit)
  bool feasible() const { return violation <= 0.0; }
};

/// Deb's feasibility rule: feasible beats infeasible; feasible individuals
/// compare on the objective, infeasible ones on the violation.
inline bool ga_better(const GaIndividual& a, const GaIndividual& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) return a.objective > b.objective;
  return a.violation < b.violation;
}

}  // namespace detail

/// Real-coded GA for maximizing f_product subject to f_risk < t_lim on the
/// box [0, l_max]^dim: tournament selection, blend crossover, Gaussian
/// mutation, elitism, feasibility-rule constraint handling. The strict
/// constraint is implemented as f_risk <= t_lim - 1e-9.
inline OptimizationResult optimize_thresholds(const Predictor& f_product,
                                              const Predictor& f_risk, double t_lim,
                                              double l_max, int dim, const GaConfig& cfg = {}) {
  if (!(t_lim > 0.0)) throw ConfigError("optimize_thresholds: t_lim must be positive");
  if (dim < 1) throw ConfigError("optimize_thresholds: dim must be >= 1");
  if (!(l_max > 0.0)) throw ConfigError("optimize_thresholds: l_max must be positive");
  cfg.validate();

  const double limit = t_lim - 1e-9;
  Rng rng(cfg.seed);

  auto evaluate = [&](detail::GaIndividual& ind) {
    ind.objective = f_product(ind.x);
    ind.risk = f_risk(ind.x);
    ind.violation = std::max(0.0, ind.risk - limit);
  };

  std::vector<detail::GaIndividual> pop(cfg.population_size);
  for (auto& ind : pop) {
    ind.x.resize(dim);
    for (int k = 0; k < dim; ++k) ind.x[k] = rng.uniform(0.0, l_max);
    evaluate(ind);
  }

  auto tournament = [&]() -> const detail::GaIndividual& {
    const detail::GaIndividual* best = &pop[rng.uniform_index(pop.size())];
    for (int t = 1; t < cfg.tournament_size; ++t) {
      const detail::GaIndividual& cand = pop[rng.uniform_index(pop.size())];
      if (detail::ga_better(cand, *best)) best = &cand;
    }
    return *best;
  };

  detail::GaIndividual incumbent = pop[0];
  for (const auto& ind : pop)
    if (detail::ga_better(ind, incumbent)) incumbent = ind;

  OptimizationResult result;
  const double sigma = cfg.mutation_std * l_max;

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<detail::GaIndividual> next;
    next.reserve(pop.size());
    next.push_back(incumbent);  // elitism
    while (next.size() < pop.size()) {
      detail::GaIndividual a = tournament();
      detail::GaIndividual b = tournament();
      if (rng.uniform() < cfg.crossover_rate) {
        for (int k = 0; k < dim; ++k) {
          const double lo = std::min(a.x[k], b.x[k]);
          const double hi = std::max(a.x[k], b.x[k]);
          const double span = hi - lo;
          a.x[k] = std::clamp(rng.uniform(lo - 0.5 * span, hi + 0.5 * span), 0.0, l_max);
          b.x[k] = std::clamp(rng.uniform(lo - 0.5 * span, hi + 0.5 * span), 0.0, l_max);
        }
      }
      for (auto* child : {&a, &b}) {
        for (int k = 0; k < dim; ++k)
          if (rng.uniform() < cfg.mutation_rate)
            child->x[k] = std::clamp(child->x[k] + rng.normal(0.0, sigma), 0.0, l_max);
        evaluate(*child);
        if (next.size() < pop.size()) next.push_back(*child);
      }
    }
    pop = std::move(next);
    for (const auto& ind : pop)
      if (detail::ga_better(ind, incumbent)) incumbent = ind;
    result.history.push_back(
        {incumbent.objective, incumbent.violation, incumbent.feasible()});
  }

  result.thresholds_star = incumbent.x;
  result.predicted_product = incumbent.objective;
  result.predicted_risk_bound = incumbent.risk;
  result.feasible = incumbent.feasible();
  return result;
}

}  // namespace hrcopt
