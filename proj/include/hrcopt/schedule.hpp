#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hrcopt/common.hpp"
#include "hrcopt/prior.hpp"

namespace hrcopt {

/// Target sequencing: manufacturing robots cycle a fixed waypoint ring, the
/// recovery robot gets a fresh drop position from the prior after each reach.
struct TargetSchedule {
  enum class Mode { manufacturing_cycle, recovery_spawn };

  Mode mode = Mode::manufacturing_cycle;
  std::vector<Eigen::Vector3d> waypoints;
  double reach_tol = 0.02;
  int current_index = 0;

  void validate() const {
    if (!(reach_tol > 0.0)) throw ConfigError("schedule: reach_tol must be positive");
    if (mode == Mode::manufacturing_cycle && waypoints.size() < 2)
      throw ConfigError("schedule: manufacturing cycle needs >= 2 waypoints");
  }

  const Eigen::Vector3d& current(const Eigen::Vector3d& recovery_target) const {
    return mode == Mode::manufacturing_cycle ? waypoints[current_index] : recovery_target;
  }
};

struct ScheduleAdvance {
  bool task_completed = false;
  std::optional<Eigen::Vector3d> new_target;
};

/// Check reach and move the schedule forward. A completed manufacturing
/// waypoint advances cyclically; a completed recovery reach draws the next
/// drop position from the warmed chain.
inline ScheduleAdvance advance_schedule(TargetSchedule& sched, const Eigen::Vector3d& ee_position,
                                        const Eigen::Vector3d& current_target, MhChain& chain) {
  ScheduleAdvance out;
  if ((ee_position - current_target).norm() > sched.reach_tol) return out;
  out.task_completed = true;
  if (sched.mode == TargetSchedule::Mode::manufacturing_cycle) {
    sched.current_index = (sched.current_index + 1) % static_cast<int>(sched.waypoints.size());
    out.new_target = sched.waypoints[sched.current_index];
  } else {
    out.new_target = sample_drop_position(chain);
  }
  return out;
}

}  // namespace hrcopt
