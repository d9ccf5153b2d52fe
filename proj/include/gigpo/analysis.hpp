#pragma once

#include <string>
#include <vector>

#include "gigpo/logio.hpp"
#include "gigpo/trainer.hpp"

namespace gigpo {

struct EvalResult {
    int episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
};

// K greedy (argmax) episodes, tasks cycling over the env's task pool with a
// seed-dependent offset. Deterministic given (config, params, seed).
EvalResult evaluate_policy(const TrainConfig& cfg, const PolicyParams& params, int episodes,
                           std::uint64_t seed);

// Recomputes step groups offline from logged state keys, one histogram per
// requested iteration, using the same grouping code as training.
std::vector<GroupSizeHistogram> analyze_groups(const TrajectoryLog& log,
                                               const std::vector<int>& iterations);

// All iterations present in a log, in ascending order.
std::vector<int> log_iterations(const TrajectoryLog& log);

struct OmegaSweepRow {
    double omega = 0.0;
    double mean_success = 0.0;
    double sd_success = 0.0;  // population sd over seeds
    int runs = 0;
};

struct OmegaSweepRun {
    double omega = 0.0;
    std::uint64_t seed = 0;
    double final_success = 0.0;  // greedy evaluation after training
};

struct OmegaSweepResult {
    std::vector<OmegaSweepRow> rows;  // sorted by omega
    std::vector<OmegaSweepRun> runs;  // sorted by (omega, seed)
};

// Trains base config per (omega, seed) and evaluates the final policy.
// out_dir, when non-empty, receives per-run metrics under omega_X/seed_Y/.
OmegaSweepResult sweep_omega(const TrainConfig& base, const std::vector<double>& omegas,
                             const std::vector<std::uint64_t>& seeds, int eval_episodes,
                             const std::string& out_dir);

}  // namespace gigpo
