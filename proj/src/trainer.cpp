#include "gigpo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace gigpo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int resolved_thread_count(int requested, int tasks) {
    int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return std::min(t, tasks);
}

// Runs fn(i) for i in [0, count) across worker threads; any exception is
// rethrown on the calling thread (lowest index wins).
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    threads = resolved_thread_count(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.algorithm != "gigpo" && cfg.algorithm != "grpo" && cfg.algorithm != "rloo")
        throw std::invalid_argument("algorithm: must be one of gigpo, grpo, rloo");
    if (cfg.omega < 0.0) throw std::invalid_argument("omega: must be >= 0");
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("gamma: must lie in (0, 1]");
    if (cfg.group_size < 2) throw std::invalid_argument("group_size: must be >= 2");
    if (cfg.num_groups < 1) throw std::invalid_argument("num_groups: must be >= 1");
    if (!(cfg.clip_eps > 0.0)) throw std::invalid_argument("clip_eps: must be > 0");
    if (cfg.clip_eps_high >= 0.0 && cfg.clip_eps_high < cfg.clip_eps)
        throw std::invalid_argument("clip_eps_high: must be >= clip_eps");
    if (cfg.kl_beta < 0.0) throw std::invalid_argument("kl_beta: must be >= 0");
    if (cfg.resample_budget < 0) throw std::invalid_argument("resample_budget: must be >= 0");
    if (cfg.iterations < 0) throw std::invalid_argument("iterations: must be >= 0");
    if (cfg.minibatch_size < 1) throw std::invalid_argument("minibatch_size: must be >= 1");
    if (cfg.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every: must be >= 0");
    if (cfg.norm.epsilon <= 0.0) throw std::invalid_argument("norm_epsilon: must be > 0");
    if (cfg.grouping.mode == GroupingMode::similarity &&
        !(cfg.grouping.threshold > 0.0 && cfg.grouping.threshold <= 1.0))
        throw std::invalid_argument("similarity_threshold: must lie in (0, 1]");
    if (!(cfg.optimizer.lr > 0.0)) throw std::invalid_argument("lr: must be > 0");
    validate_env_config(cfg.env);
}

Trajectory rollout_episode(Environment& env, const PolicyParams& params, std::uint64_t task_seed,
                           std::uint64_t nonce_base, RngStream* rng) {
    Trajectory traj;
    traj.task_seed = task_seed;
    env.set_nonce_base(nonce_base);
    StateKey key = env.reset(task_seed);
    int t = 1;
    while (!env.done()) {
        auto probs = action_distribution(params, key);
        int action;
        if (rng != nullptr) {
            action = rng->categorical(probs);
        } else {
            action = 0;
            for (std::size_t a = 1; a < probs.size(); ++a)
                if (probs[a] > probs[static_cast<std::size_t>(action)]) action = static_cast<int>(a);
        }
        const double lp = std::log(probs[static_cast<std::size_t>(action)]);
        StepResult res = env.step(action);
        traj.steps.push_back(StepRecord{t, key, action, res.reward, lp});
        traj.total_return += res.reward;
        key = res.state_key;
        ++t;
    }
    traj.success = env.succeeded();
    return traj;
}

static std::vector<EpisodeGroup> rollout_groups(const TrainConfig& cfg,
                                                const PolicySnapshot& policy_old, int iteration,
                                                std::uint64_t& task_counter, int m) {
    const int n = cfg.group_size;

    std::vector<EpisodeGroup> groups(static_cast<std::size_t>(m));
    std::vector<std::uint64_t> counters(static_cast<std::size_t>(m));
    for (int g = 0; g < m; ++g) {
        counters[static_cast<std::size_t>(g)] = task_counter;
        groups[static_cast<std::size_t>(g)].task_seed =
            task_counter % static_cast<std::uint64_t>(cfg.env.task_pool);
        groups[static_cast<std::size_t>(g)].trajectories.resize(static_cast<std::size_t>(n));
        ++task_counter;
    }

    parallel_for(n * m, cfg.threads, [&](int idx) {
        const int g = idx / n;
        const int i = idx % n;
        auto& group = groups[static_cast<std::size_t>(g)];
        auto env = make_environment(cfg.env);
        RngStream rng(mix_seed(cfg.seed, stream::kRollout, static_cast<std::uint64_t>(iteration),
                               counters[static_cast<std::size_t>(g)], static_cast<std::uint64_t>(i)));
        group.trajectories[static_cast<std::size_t>(i)] = rollout_episode(
            *env, policy_old, group.task_seed, nonce_base_for(group.task_seed, i), &rng);
    });
    return groups;
}

std::vector<EpisodeGroup> rollout_phase(const TrainConfig& cfg, const PolicySnapshot& policy_old,
                                        int iteration, std::uint64_t& task_counter) {
    return rollout_groups(cfg, policy_old, iteration, task_counter, cfg.num_groups);
}

std::vector<int> degenerate_group_indices(const std::vector<EpisodeGroup>& groups) {
    std::vector<int> out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& trajs = groups[g].trajectories;
        bool all_equal = true;
        for (std::size_t i = 1; i < trajs.size(); ++i)
            if (trajs[i].total_return != trajs[0].total_return) {
                all_equal = false;
                break;
            }
        if (all_equal) out.push_back(static_cast<int>(g));
    }
    return out;
}

GroupingOutput grouping_phase(const std::vector<EpisodeGroup>& groups, const TrainConfig& cfg) {
    GroupingOutput out;
    out.advantages.resize(groups.size());

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        auto& adv = out.advantages[g];

        auto t0 = Clock::now();
        auto step_groups = build_step_groups(group, cfg.gamma, cfg.grouping);
        out.t_grouping_s += seconds_since(t0);

        auto t1 = Clock::now();
        if (cfg.algorithm == "rloo")
            adv.episode = rloo_advantages(group);
        else
            adv.episode = episode_advantages(group, cfg.norm);
        adv.step = step_advantages(group, step_groups, cfg.norm);
        adv.omega = cfg.effective_omega();
        adv.combined = combine(adv.episode, adv.step, adv.omega);
        out.t_advantage_s += seconds_since(t1);

        out.total_step_groups += static_cast<std::int64_t>(step_groups.size());
        for (const auto& sg : step_groups) {
            if (sg.members.size() == 1) ++out.singleton_groups;
            out.total_steps += static_cast<std::int64_t>(sg.members.size());
        }
    }
    return out;
}

UpdateOutput update_phase(const TrainConfig& cfg, const std::vector<EpisodeGroup>& groups,
                          const std::vector<AdvantageSet>& advantages, const PolicySnapshot& reference,
                          PolicyParams& params, OptimizerState& opt_state, int iteration) {
    struct FlatStep {
        const StepRecord* step;
        double advantage;
    };
    std::vector<FlatStep> steps;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            const auto& traj = group.trajectories[i];
            for (std::size_t s = 0; s < traj.steps.size(); ++s)
                steps.push_back(FlatStep{&traj.steps[s], advantages[g].combined[i][s]});
        }
    }
    if (steps.empty()) return {};

    // tabular rows for every batch state, in deterministic scan order
    if (params.config().kind == PolicyConfig::Kind::tabular)
        for (const auto& fs : steps) params.materialize_row(fs.step->state_key);

    std::vector<std::uint32_t> order(steps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    RngStream shuffle_rng(mix_seed(cfg.seed, stream::kShuffle, static_cast<std::uint64_t>(iteration)));
    shuffle_rng.shuffle(order);

    const double clip_lo = 1.0 - cfg.clip_eps;
    const double clip_hi = 1.0 + cfg.clip_high();

    UpdateOutput out;
    double objective_sum = 0.0;
    std::vector<double> grad;
    const std::size_t mb = static_cast<std::size_t>(cfg.minibatch_size);
    for (std::size_t begin = 0; begin < order.size(); begin += mb) {
        const std::size_t end = std::min(begin + mb, order.size());
        const double inv = 1.0 / static_cast<double>(end - begin);
        grad.assign(params.flat().size(), 0.0);
        for (std::size_t k = begin; k < end; ++k) {
            const auto& fs = steps[order[k]];
            SurrogateTerms terms = accumulate_surrogate_grad(
                params, reference, fs.step->state_key, fs.step->action, fs.step->logprob_old,
                fs.advantage, clip_lo, clip_hi, cfg.kl_beta, inv, grad);
            objective_sum += terms.clip_term - cfg.kl_beta * terms.kl;
            out.mean_kl += terms.kl;
        }
        apply_update(params, grad, cfg.optimizer, opt_state);
    }

    const double inv_steps = 1.0 / static_cast<double>(steps.size());
    out.mean_kl *= inv_steps;
    out.loss = -objective_sum * inv_steps;
    if (!std::isfinite(out.loss)) throw std::runtime_error("update_phase: non-finite loss");
    return out;
}

TrainResult train(const TrainConfig& cfg, const TrainCallbacks& callbacks) {
    validate_train_config(cfg);

    PolicyConfig pc = cfg.policy;
    {
        auto env = make_environment(cfg.env);
        pc.action_count = env->action_count();
    }
    pc.init_seed = cfg.seed;

    TrainResult result{PolicyParams::make(pc), OptimizerState{}, PolicyParams::make(pc), {}};
    PolicyParams& params = result.params;
    const PolicySnapshot& reference = result.reference;  // iteration-0 policy, never updated

    std::uint64_t task_counter = 0;
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        IterationReport report;
        report.iteration = iter;

        const PolicySnapshot policy_old = params;

        auto t0 = Clock::now();
        auto groups = rollout_phase(cfg, policy_old, iter, task_counter);

        if (cfg.dynamic_sampling) {
            auto degenerate = degenerate_group_indices(groups);
            int round = 0;
            while (!degenerate.empty() && round < cfg.resample_budget) {
                report.resampled_groups += static_cast<int>(degenerate.size());
                auto replacements = rollout_groups(cfg, policy_old, iter, task_counter,
                                                   static_cast<int>(degenerate.size()));
                for (std::size_t k = 0; k < degenerate.size(); ++k)
                    groups[static_cast<std::size_t>(degenerate[k])] = std::move(replacements[k]);
                degenerate = degenerate_group_indices(groups);
                ++round;
            }
            if (!degenerate.empty()) {
                report.dropped_groups = static_cast<int>(degenerate.size());
                std::vector<EpisodeGroup> kept;
                kept.reserve(groups.size());
                std::vector<char> drop(groups.size(), 0);
                for (int g : degenerate) drop[static_cast<std::size_t>(g)] = 1;
                for (std::size_t g = 0; g < groups.size(); ++g)
                    if (!drop[g]) kept.push_back(std::move(groups[g]));
                groups = std::move(kept);
            }
        }
        report.t_rollout_s = seconds_since(t0);

        std::int64_t episodes = 0, successes = 0, total_steps = 0;
        double return_sum = 0.0;
        for (const auto& group : groups)
            for (const auto& traj : group.trajectories) {
                ++episodes;
                successes += traj.success ? 1 : 0;
                total_steps += traj.length();
                return_sum += traj.total_return;
            }
        if (episodes > 0) {
            report.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
            report.mean_return = return_sum / static_cast<double>(episodes);
            report.mean_length = static_cast<double>(total_steps) / static_cast<double>(episodes);
        }

        if (groups.empty()) {
            report.update_skipped = true;
        } else {
            auto grouping = grouping_phase(groups, cfg);
            report.t_grouping_s = grouping.t_grouping_s;
            report.t_advantage_s = grouping.t_advantage_s;
            if (grouping.total_step_groups > 0) {
                report.frac_singleton_groups = static_cast<double>(grouping.singleton_groups) /
                                               static_cast<double>(grouping.total_step_groups);
                report.mean_group_size = static_cast<double>(grouping.total_steps) /
                                         static_cast<double>(grouping.total_step_groups);
            }
            double abs_e = 0.0, abs_s = 0.0;
            std::int64_t n_e = 0, n_s = 0;
            for (const auto& adv : grouping.advantages) {
                for (double a : adv.episode) {
                    abs_e += std::abs(a);
                    ++n_e;
                }
                for (const auto& row : adv.step)
                    for (double a : row) {
                        abs_s += std::abs(a);
                        ++n_s;
                    }
            }
            if (n_e > 0) report.mean_abs_episode_adv = abs_e / static_cast<double>(n_e);
            if (n_s > 0) report.mean_abs_step_adv = abs_s / static_cast<double>(n_s);

            if (callbacks.on_grouped) callbacks.on_grouped(iter, groups, grouping.advantages);

            auto t1 = Clock::now();
            auto update = update_phase(cfg, groups, grouping.advantages, reference, params,
                                       result.opt_state, iter);
            report.t_update_s = seconds_since(t1);
            report.mean_kl = update.mean_kl;
            report.loss = update.loss;
        }

        if (callbacks.on_trajectories) callbacks.on_trajectories(iter, groups);
        if (callbacks.on_report) callbacks.on_report(report);
        result.reports.push_back(report);

        if (callbacks.on_checkpoint && cfg.checkpoint_every > 0 &&
            (iter + 1) % cfg.checkpoint_every == 0 && iter + 1 < cfg.iterations)
            callbacks.on_checkpoint(iter, params, result.opt_state, false);
    }

    if (callbacks.on_checkpoint)
        callbacks.on_checkpoint(cfg.iterations - 1, params, result.opt_state, true);
    return result;
}

}  // namespace gigpo
