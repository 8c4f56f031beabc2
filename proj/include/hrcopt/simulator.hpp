#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "hrcopt/common.hpp"
#include "hrcopt/impedance.hpp"
#include "hrcopt/kinematics.hpp"
#include "hrcopt/priority.hpp"
#include "hrcopt/prior.hpp"
#include "hrcopt/schedule.hpp"

namespace hrcopt {

enum class RobotRole { manufacturing, recovery };

struct RobotSpec {
  RobotModel model;
  RobotRole role = RobotRole::manufacturing;
  Eigen::VectorXd home;
  ImpedanceParams impedance;
  // Angular-velocity regulation toward the home orientation. Off by default:
  // reaching tasks here are positional, and pinning the world-frame home
  // orientation across large reaches drives this wrist geometry singular.
  double orientation_gain = 0.0;
  std::vector<Eigen::Vector3d> waypoints;  // manufacturing cycle, >= 2 points
};

/// Full scene description. Robots are stored manufacturing-first with the
/// single recovery robot last (load order of the manufacturing robots is
/// preserved and fixes the threshold indexing).
struct SceneConfig {
  std::vector<RobotSpec> robots;
  PriorDistribution prior;
  MhConfig mh;
  CollisionParams collision;
  PriorityConfig priority;  // thresholds act as defaults, overridable per run
  double reach_tol = 0.02;
  double dt = 0.002;
  double trial_timeout = 60.0;
  std::uint64_t seed = 0;

  int n_manufacturing() const { return static_cast<int>(robots.size()) - 1; }

  void normalize_order() {
    std::vector<RobotSpec> ordered;
    for (auto& r : robots)
      if (r.role == RobotRole::manufacturing) ordered.push_back(std::move(r));
    for (auto& r : robots)
      if (r.role == RobotRole::recovery) ordered.push_back(std::move(r));
    robots = std::move(ordered);
  }

  void validate() const {
    int n_rec = 0;
    for (const auto& r : robots) n_rec += r.role == RobotRole::recovery ? 1 : 0;
    if (n_rec != 1) throw ConfigError("scene: exactly one recovery robot required");
    if (static_cast<int>(robots.size()) - n_rec < 1)
      throw ConfigError("scene: at least one manufacturing robot required");
    if (robots.back().role != RobotRole::recovery)
      throw ConfigError("scene: robots must be ordered manufacturing-first (call normalize_order)");
    if (!(dt >= 0.001 && dt <= 0.02)) throw ConfigError("scene: dt must be in [0.001, 0.02]");
    if (!(trial_timeout > 0.0)) throw ConfigError("scene: trial_timeout must be positive");
    if (!(reach_tol > 0.0)) throw ConfigError("scene: reach_tol must be positive");
    for (const auto& r : robots) {
      r.model.validate();
      r.impedance.validate();
      if (r.home.size() != r.model.dof())
        throw ConfigError("scene: robot '" + r.model.name + "' home length != dof");
      if (r.role == RobotRole::manufacturing && r.waypoints.size() < 2)
        throw ConfigError("scene: robot '" + r.model.name + "' needs >= 2 waypoints");
    }
    prior.validate();
    mh.validate();
    collision.validate();
    PriorityConfig pc = priority;
    if (pc.thresholds.size() == 0) pc.thresholds = Eigen::VectorXd::Zero(n_manufacturing());
    if (pc.thresholds.size() != n_manufacturing())
      throw ConfigError("scene: priority threshold count != manufacturing robot count");
    pc.validate();
  }
};

struct TrialOptions {
  PriorityMode mode = PriorityMode::thresholded;
  bool freeze_manufacturing = false;
  bool log_trajectory = false;
};

struct TrajectorySample {
  double t = 0.0;
  std::vector<Eigen::Vector3d> ee;
  std::vector<Eigen::Vector3d> target;
  std::vector<double> l;  // per manufacturing robot
  std::vector<int> p;
  double min_pair_distance = std::numeric_limits<double>::infinity();
};

struct TrialResult {
  double risk_time = 0.0;
  std::vector<int> tasks_completed;  // per manufacturing robot
  bool deadlocked = false;
  bool security_breach = false;
  double min_pair_distance = std::numeric_limits<double>::infinity();
  double max_l = 0.0;  // largest manufacturing distance-to-target seen
  std::vector<TrajectorySample> trajectory;

  int total_tasks() const {
    return std::accumulate(tasks_completed.begin(), tasks_completed.end(), 0);
  }
};

struct SampleRecord {
  Eigen::VectorXd thresholds;
  double x_product = 0.0;
  double x_risk = 0.0;
  int n_trials = 0;
  int discarded_trials = 0;
  std::uint64_t seed = 0;
  // aggregates beyond the dataset row, used by audits and benchmarks
  double sd_product = 0.0;
  double sd_risk = 0.0;
  double min_pair_distance = std::numeric_limits<double>::infinity();
  int security_breaches = 0;
};

/// One reaching trial: robots start at home, a fresh drop position is drawn
/// from the prior, and the loop runs impedance -> priority IK -> integration
/// until the recovery reach completes or the timeout elapses.
inline TrialResult run_trial(const SceneConfig& scene, const Eigen::VectorXd& thresholds,
                             std::uint64_t seed, const TrialOptions& options = {}) {
  const int n_m = scene.n_manufacturing();
  const int n_robots = n_m + 1;
  if (thresholds.size() != n_m) throw ConfigError("run_trial: thresholds length != N_m");
  for (int i = 0; i < n_m; ++i)
    if (thresholds[i] < 0.0 || thresholds[i] > scene.priority.l_max)
      throw ConfigError("run_trial: threshold out of [0, l_max]");

  std::vector<RobotModel> models;
  models.reserve(n_robots);
  for (const auto& r : scene.robots) models.push_back(r.model);

  PriorityConfig cfg = scene.priority;
  cfg.thresholds = thresholds;
  PriorityIkContext ik(models, scene.collision, cfg);

  MhConfig mh = scene.mh;
  mh.seed = derive_seed(seed, 0x5eedD20bULL);
  MhChain chain(scene.prior, mh);
  const Eigen::Vector3d drop = sample_drop_position(chain);

  WorldState state;
  state.q.resize(n_robots);
  state.qdot.resize(n_robots);
  state.ee.resize(n_robots);
  state.target.resize(n_robots);
  std::vector<ImpedanceState> ctrl(n_robots);
  std::vector<Eigen::Quaterniond> ref_orientation(n_robots);
  std::vector<TargetSchedule> sched(n_robots);

  for (int i = 0; i < n_robots; ++i) {
    const auto& spec = scene.robots[i];
    state.q[i] = spec.home;
    state.qdot[i] = Eigen::VectorXd::Zero(spec.model.dof());
    state.ee[i] = forward_kinematics(spec.model, spec.home);
    ref_orientation[i] = state.ee[i].orientation;
    ctrl[i].x = state.ee[i].position;
    if (spec.role == RobotRole::manufacturing) {
      sched[i].mode = TargetSchedule::Mode::manufacturing_cycle;
      sched[i].waypoints = spec.waypoints;
      sched[i].reach_tol = scene.reach_tol;
      state.target[i] = spec.waypoints[0];
    } else {
      sched[i].mode = TargetSchedule::Mode::recovery_spawn;
      sched[i].reach_tol = scene.reach_tol;
      state.target[i] = drop;
    }
  }

  TrialResult result;
  result.tasks_completed.assign(n_m, 0);

  auto track_distances = [&]() {
    const Eigen::Vector3d& p_r = state.ee[n_m].position;
    for (int i = 0; i < n_m; ++i) {
      const double d = (state.ee[i].position - p_r).norm();
      result.min_pair_distance = std::min(result.min_pair_distance, d);
    }
  };
  track_distances();

  const long max_steps = static_cast<long>(std::ceil(scene.trial_timeout / scene.dt));
  std::vector<TaskCommand> commands(n_robots);
  double t = 0.0;
  bool done = false;

  for (long step = 0; step < max_steps && !done; ++step) {
    for (int i = 0; i < n_robots; ++i) {
      commands[i].robot_index = i;
      const bool frozen =
          options.freeze_manufacturing && scene.robots[i].role == RobotRole::manufacturing;
      if (frozen) {
        commands[i].desired_twist.setZero();
        continue;
      }
      // the controller sees measured position and velocity, so a clamped or
      // constraint-limited tick cannot wind up the internal state
      ctrl[i].x = state.ee[i].position;
      ctrl[i].xdot = geometric_jacobian(scene.robots[i].model, state.q[i]).topRows<3>() *
                     state.qdot[i];
      ctrl[i].x_d = state.target[i];
      const Eigen::Vector3d v = impedance_step(ctrl[i], scene.robots[i].impedance, scene.dt);
      commands[i].desired_twist.head<3>() = v;
      commands[i].desired_twist.tail<3>() = orientation_hold(
          state.ee[i].orientation, ref_orientation[i], scene.robots[i].orientation_gain);
    }

    IkDiagnostics diag;
    const Eigen::VectorXd qdot = ik.step(state, commands, options.mode, &diag);
    for (int i = 0; i < n_robots; ++i) {
      state.qdot[i] = qdot.segment(ik.offsets()[i], models[i].dof());
      state.q[i] += state.qdot[i] * scene.dt;
      state.ee[i] = forward_kinematics(models[i], state.q[i]);
    }
    t += scene.dt;
    track_distances();

    if (result.min_pair_distance < scene.collision.d_s - 0.01) {
      result.security_breach = true;
      result.risk_time = t;
      break;
    }

    double min_d_now = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_m; ++i)
      min_d_now = std::min(min_d_now, (state.ee[i].position - state.ee[n_m].position).norm());

    if (options.log_trajectory) {
      TrajectorySample row;
      row.t = t;
      row.min_pair_distance = min_d_now;
      for (int i = 0; i < n_robots; ++i) {
        row.ee.push_back(state.ee[i].position);
        row.target.push_back(state.target[i]);
      }
      row.l.resize(n_m);
      for (int i = 0; i < n_m; ++i) row.l[i] = (state.ee[i].position - state.target[i]).norm();
      row.p = diag.p;
      result.trajectory.push_back(std::move(row));
    }

    for (int i = 0; i < n_m; ++i) {
      result.max_l = std::max(result.max_l, (state.ee[i].position - state.target[i]).norm());
      if (options.freeze_manufacturing) continue;
      const auto adv = advance_schedule(sched[i], state.ee[i].position, state.target[i], chain);
      if (adv.task_completed) {
        ++result.tasks_completed[i];
        state.target[i] = *adv.new_target;
      }
    }
    if ((state.ee[n_m].position - state.target[n_m]).norm() <= scene.reach_tol) {
      result.risk_time = t;
      done = true;
    }
  }

  if (!done && !result.security_breach) {
    result.deadlocked = true;
    result.risk_time = scene.trial_timeout;
  }
  return result;
}

/// Mean productivity and risk over n_trials completed trials. Deadlocked
/// trials are discarded and replaced using the continuation of the derived
/// seed sequence, so the record is independent of the parallel job count.
inline SampleRecord run_batch(const SceneConfig& scene, const Eigen::VectorXd& thresholds,
                              int n_trials, std::uint64_t seed, int jobs = 1,
                              const TrialOptions& options = {}) {
  if (n_trials < 1) throw ConfigError("run_batch: n_trials must be >= 1");
  SampleRecord rec;
  rec.thresholds = thresholds;
  rec.n_trials = n_trials;
  rec.seed = seed;

  std::vector<TrialResult> kept;
  kept.reserve(n_trials);
  long next_index = 0;
  int discarded = 0;
  const long attempt_limit = 2L * n_trials + 10;

  while (static_cast<int>(kept.size()) < n_trials) {
    const std::size_t wave = static_cast<std::size_t>(n_trials - static_cast<int>(kept.size()));
    if (next_index + static_cast<long>(wave) > attempt_limit)
      throw ConfigError("run_batch: more than half of the trials deadlocked; check the scene");
    std::vector<TrialResult> wave_results(wave);
    const long base = next_index;
    parallel_for(wave, jobs, [&](std::size_t w) {
      wave_results[w] =
          run_trial(scene, thresholds, derive_seed(seed, static_cast<std::uint64_t>(base + w)),
                    options);
    });
    next_index += static_cast<long>(wave);
    for (auto& tr : wave_results) {
      rec.min_pair_distance = std::min(rec.min_pair_distance, tr.min_pair_distance);
      rec.security_breaches += tr.security_breach ? 1 : 0;
      if (tr.deadlocked || tr.security_breach)
        ++discarded;
      else
        kept.push_back(std::move(tr));
    }
  }

  rec.discarded_trials = discarded;
  double sum_p = 0.0, sum_r = 0.0;
  for (const auto& tr : kept) {
    sum_p += tr.total_tasks();
    sum_r += tr.risk_time;
  }
  rec.x_product = sum_p / n_trials;
  rec.x_risk = sum_r / n_trials;
  double var_p = 0.0, var_r = 0.0;
  for (const auto& tr : kept) {
    var_p += (tr.total_tasks() - rec.x_product) * (tr.total_tasks() - rec.x_product);
    var_r += (tr.risk_time - rec.x_risk) * (tr.risk_time - rec.x_risk);
  }
  rec.sd_product = std::sqrt(var_p / n_trials);
  rec.sd_risk = std::sqrt(var_r / n_trials);
  return rec;
}

/// Uniform threshold sampling U(0, l_max)^N_m with one batch per sample.
/// `row_sink`, when set, receives each record as soon as it is complete.
inline std::vector<SampleRecord> collect_dataset(
    const SceneConfig& scene, int n_samples, int n_trials, std::uint64_t seed, int jobs = 1,
    const std::function<void(const SampleRecord&)>& row_sink = nullptr) {
  if (n_samples < 1) throw ConfigError("collect_dataset: n_samples must be >= 1");
  const int n_m = scene.n_manufacturing();
  std::vector<SampleRecord> out;
  out.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    Rng thr_rng(derive_seed(seed, 2ULL * s));
    Eigen::VectorXd thr(n_m);
    for (int i = 0; i < n_m; ++i) thr[i] = thr_rng.uniform(0.0, scene.priority.l_max);
    SampleRecord rec = run_batch(scene, thr, n_trials, derive_seed(seed, 2ULL * s + 1), jobs);
    if (row_sink) row_sink(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

struct BenchmarkResult {
  SampleRecord non_continuous;        // productivity undefined for this row
  SampleRecord always_recovery;       // p == 1
  SampleRecord always_manufacturing;  // p == 0
};

/// The three reference conditions of the benchmark table: non-continuous
/// (manufacturing frozen), always prioritizing recovery, always prioritizing
/// manufacturing.
inline BenchmarkResult benchmark_modes(const SceneConfig& scene, int n_trials, std::uint64_t seed,
                                       int jobs = 1) {
  const int n_m = scene.n_manufacturing();
  BenchmarkResult out;
  TrialOptions opt;
  opt.mode = PriorityMode::always_recovery;
  opt.freeze_manufacturing = true;
  out.non_continuous =
      run_batch(scene, Eigen::VectorXd::Zero(n_m), n_trials, derive_seed(seed, 1), jobs, opt);
  opt.freeze_manufacturing = false;
  out.always_recovery =
      run_batch(scene, Eigen::VectorXd::Zero(n_m), n_trials, derive_seed(seed, 2), jobs, opt);
  opt.mode = PriorityMode::always_manufacturing;
  out.always_manufacturing =
      run_batch(scene, Eigen::VectorXd::Constant(n_m, scene.priority.l_max), n_trials,
                derive_seed(seed, 3), jobs, opt);
  return out;
}

/// Realized productivity/risk at a candidate threshold vector.
inline SampleRecord evaluate_solution(const SceneConfig& scene, const Eigen::VectorXd& thresholds,
                                      int n_trials, std::uint64_t seed, int jobs = 1) {
  return run_batch(scene, thresholds, n_trials, seed, jobs);
}

}  // namespace hrcopt
