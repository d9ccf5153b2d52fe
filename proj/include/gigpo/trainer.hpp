#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gigpo/advantage.hpp"
#include "gigpo/env.hpp"
#include "gigpo/policy.hpp"
#include "gigpo/trajectory.hpp"

namespace gigpo {

struct TrainConfig {
    std::string algorithm = "gigpo";  // gigpo | grpo | rloo
    NormalizationFactor norm;
    double omega = 1.0;
    double gamma = 0.95;
    int group_size = 8;   // trajectories per episode group
    int num_groups = 16;  // episode groups per iteration
    double clip_eps = 0.2;
    double clip_eps_high = -1.0;  // < 0: symmetric clipping at clip_eps
    double kl_beta = 0.01;
    bool dynamic_sampling = false;
    int resample_budget = 3;
    int iterations = 50;
    int minibatch_size = 256;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // 0: final checkpoint only
    GroupingConfig grouping;
    EnvConfig env;
    PolicyConfig policy;  // action_count/init_seed resolved from env/seed
    OptimizerConfig optimizer;
    int threads = 0;  // rollout parallelism cap, 0 = auto

    // grpo and rloo collapse the step-level term
    double effective_omega() const { return algorithm == "gigpo" ? omega : 0.0; }
    double clip_high() const { return clip_eps_high >= 0.0 ? clip_eps_high : clip_eps; }
};

// throws std::invalid_argument naming the offending field
void validate_train_config(const TrainConfig& cfg);

// Nonce streams are a pure function of logged identifiers, so replay can
// reproduce nonce-injected keys exactly.
inline std::uint64_t nonce_base_for(std::uint64_t task_seed, int traj_index) {
    return mix_seed(stream::kNonce, task_seed, static_cast<std::uint64_t>(traj_index));
}

struct IterationReport {
    int iteration = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_length = 0.0;
    double mean_abs_episode_adv = 0.0;
    double mean_abs_step_adv = 0.0;
    double frac_singleton_groups = 0.0;
    double mean_group_size = 0.0;
    double mean_kl = 0.0;
    double loss = 0.0;
    double t_rollout_s = 0.0;
    double t_grouping_s = 0.0;
    double t_advantage_s = 0.0;
    double t_update_s = 0.0;
    int resampled_groups = 0;
    int dropped_groups = 0;
    bool update_skipped = false;
};

struct TrainCallbacks {
    std::function<void(const IterationReport&)> on_report;
    std::function<void(int iteration, const std::vector<EpisodeGroup>&)> on_trajectories;
    std::function<void(int iteration, const PolicyParams&, const OptimizerState&, bool final)>
        on_checkpoint;
    // test hook: advantage sets in group order, after the grouping phase
    std::function<void(int iteration, const std::vector<EpisodeGroup>&, const std::vector<AdvantageSet>&)>
        on_grouped;
};

struct TrainResult {
    PolicyParams params;
    OptimizerState opt_state;
    PolicySnapshot reference;
    std::vector<IterationReport> reports;
};

// One episode under the given policy. A null rng selects the argmax action
// (evaluation mode); otherwise actions are sampled.
Trajectory rollout_episode(Environment& env, const PolicyParams& params, std::uint64_t task_seed,
                           std::uint64_t nonce_base, RngStream* rng);

// Rollout phase: num_groups episode groups of group_size trajectories each,
// sampled under a fixed snapshot. task_counter advances one slot per group
// and maps onto the env's task pool; per-trajectory RNG streams make the
// result independent of scheduling.
std::vector<EpisodeGroup> rollout_phase(const TrainConfig& cfg, const PolicySnapshot& policy_old,
                                        int iteration, std::uint64_t& task_counter);

struct GroupingOutput {
    std::vector<AdvantageSet> advantages;  // aligned with groups
    double t_grouping_s = 0.0;
    double t_advantage_s = 0.0;
    std::int64_t singleton_groups = 0;
    std::int64_t total_step_groups = 0;
    std::int64_t total_steps = 0;
};

GroupingOutput grouping_phase(const std::vector<EpisodeGroup>& groups, const TrainConfig& cfg);

// Drops groups whose returns are all equal; the caller rolls replacements.
// Returns indices of degenerate groups.
std::vector<int> degenerate_group_indices(const std::vector<EpisodeGroup>& groups);

struct UpdateOutput {
    double mean_kl = 0.0;
    double loss = 0.0;
};

UpdateOutput update_phase(const TrainConfig& cfg, const std::vector<EpisodeGroup>& groups,
                          const std::vector<AdvantageSet>& advantages, const PolicySnapshot& reference,
                          PolicyParams& params, OptimizerState& opt_state, int iteration);

TrainResult train(const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

}  // namespace gigpo
