#include "gigpo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>

namespace gigpo {

EvalResult evaluate_policy(const TrainConfig& cfg, const PolicyParams& params, int episodes,
                           std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("episodes: must be >= 1");

    auto env = make_environment(cfg.env);
    EvalResult res;
    res.episodes = episodes;
    double return_sum = 0.0;
    int successes = 0;
    for (int k = 0; k < episodes; ++k) {
        const std::uint64_t task_seed =
            (seed + static_cast<std::uint64_t>(k)) % static_cast<std::uint64_t>(cfg.env.task_pool);
        Trajectory traj =
            rollout_episode(*env, params, task_seed, nonce_base_for(task_seed, k), nullptr);
        successes += traj.success ? 1 : 0;
        return_sum += traj.total_return;
    }
    res.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
    res.mean_return = return_sum / static_cast<double>(episodes);
    return res;
}

std::vector<int> log_iterations(const TrajectoryLog& log) {
    std::set<int> seen;
    for (const auto& rec : log.records) seen.insert(rec.iteration);
    return std::vector<int>(seen.begin(), seen.end());
}

std::vector<GroupSizeHistogram> analyze_groups(const TrajectoryLog& log,
                                               const std::vector<int>& iterations) {
    // rebuild episode groups per (iteration, group id)
    std::map<std::pair<int, int>, EpisodeGroup> groups;
    std::set<int> wanted(iterations.begin(), iterations.end());
    for (const auto& rec : log.records) {
        if (wanted.count(rec.iteration) == 0) continue;
        auto& group = groups[{rec.iteration, rec.group}];
        group.task_seed = rec.task_seed;
        Trajectory traj;
        traj.task_seed = rec.task_seed;
        traj.success = rec.success;
        traj.total_return = rec.total_return;
        traj.steps = rec.steps;
        if (static_cast<int>(group.trajectories.size()) != rec.trajectory)
            throw std::runtime_error("analyze: trajectory records out of order at iteration " +
                                     std::to_string(rec.iteration));
        group.trajectories.push_back(std::move(traj));
    }

    std::vector<GroupSizeHistogram> out;
    for (int iter : iterations) {
        bool found = false;
        GroupSizeHistogram h;
        h.iteration = iter;
        for (const auto& [key, group] : groups) {
            if (key.first != iter) continue;
            found = true;
            auto step_groups = build_step_groups(group, log.header.gamma, log.header.grouping);
            for (const auto& sg : step_groups) {
                ++h.total_groups;
                h.total_steps += static_cast<std::int64_t>(sg.members.size());
                ++h.count[histogram_bucket(static_cast<std::int64_t>(sg.members.size()))];
            }
        }
        if (!found) {
            auto available = log_iterations(log);
            std::string msg = "analyze: iteration " + std::to_string(iter) +
                              " not present in log; available iterations:";
            for (int a : available) msg += " " + std::to_string(a);
            throw std::runtime_error(msg);
        }
        if (h.total_groups > 0) {
            for (int b = 0; b < 5; ++b)
                h.frac[b] = static_cast<double>(h.count[b]) / static_cast<double>(h.total_groups);
            // same integer-ratio arithmetic as the training-time report
            h.frac_singleton =
                static_cast<double>(h.count[0]) / static_cast<double>(h.total_groups);
            h.mean_group_size =
                static_cast<double>(h.total_steps) / static_cast<double>(h.total_groups);
        }
        out.push_back(h);
    }
    return out;
}

OmegaSweepResult sweep_omega(const TrainConfig& base, const std::vector<double>& omegas,
                             const std::vector<std::uint64_t>& seeds, int eval_episodes,
                             const std::string& out_dir) {
    if (omegas.empty()) throw std::invalid_argument("sweep: omega list must not be empty");
    if (seeds.empty()) throw std::invalid_argument("sweep: seed list must not be empty");

    std::vector<double> sorted_omegas = omegas;
    std::sort(sorted_omegas.begin(), sorted_omegas.end());
    std::vector<std::uint64_t> sorted_seeds = seeds;
    std::sort(sorted_seeds.begin(), sorted_seeds.end());

    OmegaSweepResult result;
    for (double omega : sorted_omegas) {
        std::vector<double> finals;
        for (std::uint64_t seed : sorted_seeds) {
            TrainConfig cfg = base;
            cfg.omega = omega;
            cfg.seed = seed;

            TrainCallbacks callbacks;
            std::unique_ptr<MetricsWriter> metrics;
            if (!out_dir.empty()) {
                const std::string run_dir =
                    out_dir + "/omega_" + format_g9(omega) + "/seed_" + std::to_string(seed);
                std::filesystem::create_directories(run_dir);
                metrics = std::make_unique<MetricsWriter>(run_dir + "/metrics.csv");
                callbacks.on_report = [&](const IterationReport& r) { metrics->write_row(r); };
            }
            TrainResult run = train(cfg, callbacks);
            EvalResult eval = evaluate_policy(cfg, run.params, eval_episodes, seed);
            finals.push_back(eval.success_rate);
            result.runs.push_back(OmegaSweepRun{omega, seed, eval.success_rate});
        }
        double mean = 0.0;
        for (double f : finals) mean += f;
        mean /= static_cast<double>(finals.size());
        double var = 0.0;
        for (double f : finals) var += (f - mean) * (f - mean);
        var /= static_cast<double>(finals.size());
        result.rows.push_back(
            OmegaSweepRow{omega, mean, std::sqrt(var), static_cast<int>(finals.size())});
    }
    return result;
}

}  // namespace gigpo
