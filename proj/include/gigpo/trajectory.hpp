#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gigpo/state_key.hpp"

namespace gigpo {

// One decision: the state the action was taken in, the action, the reward
// the environment returned, and the behaviour policy's log-probability of
// the action at sampling time.
struct StepRecord {
    int t = 0;  // 1-based, strictly increasing within a trajectory
    StateKey state_key;
    int action = 0;
    double reward = 0.0;
    double logprob_old = 0.0;
};

struct Trajectory {
    std::vector<StepRecord> steps;
    bool success = false;
    double total_return = 0.0;  // sum of step rewards
    std::uint64_t task_seed = 0;

    int length() const { return static_cast<int>(steps.size()); }
};

// N trajectories rolled out from the same task seed and byte-identical
// initial states. Relative advantages need N >= 2.
struct EpisodeGroup {
    std::vector<Trajectory> trajectories;
    std::uint64_t task_seed = 0;

    int size() const { return static_cast<int>(trajectories.size()); }
};

inline void validate_trajectory(const Trajectory& traj, int horizon) {
    if (horizon > 0 && traj.length() > horizon)
        throw std::logic_error("trajectory exceeds horizon");
    double sum = 0.0;
    int prev_t = 0;
    for (const auto& s : traj.steps) {
        if (s.t != prev_t + 1) throw std::logic_error("timesteps must start at 1 and increase by 1");
        if (!std::isfinite(s.reward)) throw std::logic_error("non-finite reward");
        if (s.logprob_old > 0.0) throw std::logic_error("logprob_old must be <= 0");
        prev_t = s.t;
        sum += s.reward;
    }
    if (std::abs(sum - traj.total_return) > 1e-12)
        throw std::logic_error("total_return inconsistent with step rewards");
}

inline void validate_episode_group(const EpisodeGroup& group) {
    if (group.size() < 2) throw std::invalid_argument("episode group needs at least 2 trajectories");
    for (const auto& traj : group.trajectories) {
        if (traj.steps.empty()) throw std::invalid_argument("empty trajectory in episode group");
        if (traj.task_seed != group.task_seed)
            throw std::invalid_argument("trajectory task seed differs from group task seed");
    }
    const StateKey& first = group.trajectories.front().steps.front().state_key;
    for (const auto& traj : group.trajectories) {
        if (traj.steps.front().state_key != first)
            throw std::invalid_argument("trajectories in a group must share the initial state key");
    }
}

}  // namespace gigpo
