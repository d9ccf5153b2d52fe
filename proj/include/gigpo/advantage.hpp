#pragma once

#include <vector>

#include "gigpo/trajectory.hpp"

namespace gigpo {

// Divisor applied after mean-centering a group of returns: the population
// standard deviation (plus epsilon), or exactly 1.
struct NormalizationFactor {
    enum class Mode { std_dev, one };
    Mode mode = Mode::std_dev;
    double epsilon = 1e-8;
};

// Mean-centered, normalized total returns; one value per trajectory.
std::vector<double> episode_advantages(const EpisodeGroup& group, const NormalizationFactor& norm);

// Leave-one-out baseline: R_i minus the mean of the other N-1 returns.
std::vector<double> rloo_advantages(const EpisodeGroup& group);

// R_t = sum_{k>=t} gamma^(k-t) r_k, one backward pass, gamma in (0, 1].
std::vector<double> discounted_returns(const Trajectory& traj, double gamma);

struct StepGroupMember {
    int traj = 0;  // index into group.trajectories
    int t = 0;     // 1-based timestep
    int action = 0;
    double disc_return = 0.0;
};

// All occurrences of one anchor state across a group's trajectories.
struct StepGroup {
    StateKey anchor;
    std::vector<StepGroupMember> members;  // in (traj, t) scan order
};

enum class GroupingMode { exact, similarity };

struct GroupingConfig {
    GroupingMode mode = GroupingMode::exact;
    double threshold = 0.9;  // similarity mode only, must lie in (0, 1]
};

// Partitions every (trajectory, timestep) of the group into step groups.
// Exact mode buckets byte-equal keys; similarity mode greedily clusters
// against group representatives in (traj, t) scan order, joining the first
// group whose representative similarity reaches the threshold. Output is
// sorted by anchor key bytes.
std::vector<StepGroup> build_step_groups(const EpisodeGroup& group, double gamma,
                                         const GroupingConfig& grouping);

// Longest-common-subsequence length divided by the longer length; 1 iff
// byte-equal, 0 iff no byte in common.
double key_similarity(const StateKey& a, const StateKey& b);

// Ragged per-(trajectory, timestep) values aligned with group.trajectories.
using StepValues = std::vector<std::vector<double>>;

// Within-group mean-centered, normalized discounted returns. Singleton
// groups yield exactly 0 in both modes.
StepValues step_advantages(const EpisodeGroup& group, const std::vector<StepGroup>& groups,
                           const NormalizationFactor& norm);

// combined[i][t] = episode_adv[i] + omega * step_adv[i][t]
StepValues combine(const std::vector<double>& episode_adv, const StepValues& step_adv, double omega);

struct AdvantageSet {
    std::vector<double> episode;
    StepValues step;
    StepValues combined;
    double omega = 0.0;
};

}  // namespace gigpo
