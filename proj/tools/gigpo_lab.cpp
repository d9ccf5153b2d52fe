// gigpo_lab: train/evaluate critic-free group-based RL policies on the
// built-in environments and reproduce the diagnostic studies (group-size
// dynamics, omega sweeps, replay verification) as CSV-emitting subcommands.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gigpo/analysis.hpp"
#include "gigpo/checkpoint.hpp"
#include "gigpo/config.hpp"
#include "gigpo/logio.hpp"
#include "gigpo/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gigpo;

int env_thread_cap() {
    const char* v = std::getenv("GIGPO_LAB_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (end == nullptr || *end != '\0' || n < 0) {
        std::cerr << "warning: ignoring invalid GIGPO_LAB_THREADS='" << v << "'\n";
        return 0;
    }
    return static_cast<int>(n);
}

std::vector<double> parse_double_list(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        std::string tok = csv.substr(pos, comma - pos);
        if (!tok.empty()) {
            try {
                out.push_back(std::stod(tok));
            } catch (...) {
                throw std::invalid_argument(flag + ": cannot parse '" + tok + "' as a number");
            }
        }
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument(flag + ": empty list");
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv, const std::string& flag) {
    std::vector<std::uint64_t> out;
    for (double v : parse_double_list(csv, flag)) {
        if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
            throw std::invalid_argument(flag + ": entries must be non-negative integers");
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv, const std::string& flag) {
    std::vector<int> out;
    for (std::uint64_t v : parse_u64_list(csv, flag)) out.push_back(static_cast<int>(v));
    return out;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, long long seed_override,
              int iters_override, bool log_trajectories, bool dry_run) {
    TrainConfig cfg = load_train_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (iters_override >= 0) cfg.iterations = iters_override;
    cfg.threads = env_thread_cap();
    validate_train_config(cfg);

    if (dry_run) {
        std::cout << dump_train_config(cfg).dump(2) << "\n";
        return 0;
    }

    fs::create_directories(out_dir);
    std::ofstream cfg_out(out_dir + "/config.json");
    cfg_out << dump_train_config(cfg).dump(2) << "\n";
    cfg_out.close();

    MetricsWriter metrics(out_dir + "/metrics.csv");
    std::unique_ptr<TrajectoryLogWriter> traj_writer;
    if (log_trajectories) {
        TrajectoryLogHeader header;
        header.env = cfg.env;
        header.config_hash = config_hash(cfg);
        header.gamma = cfg.gamma;
        header.grouping = cfg.grouping;
        traj_writer = std::make_unique<TrajectoryLogWriter>(out_dir + "/trajectories.jsonl", header);
    }

    TrainCallbacks callbacks;
    callbacks.on_report = [&](const IterationReport& r) {
        metrics.write_row(r);
        if (r.update_skipped)
            std::cerr << "warning: iteration " << r.iteration
                      << ": all groups degenerate after resampling, update skipped\n";
    };
    if (traj_writer)
        callbacks.on_trajectories = [&](int iter, const std::vector<EpisodeGroup>& groups) {
            traj_writer->write_iteration(iter, groups);
        };
    callbacks.on_checkpoint = [&](int iter, const PolicyParams& params, const OptimizerState& opt,
                                  bool final) {
        Checkpoint ckpt{cfg, params, opt, iter + 1, final};
        if (final) {
            save_checkpoint(out_dir + "/checkpoint_final.json", ckpt);
        } else {
            char name[64];
            std::snprintf(name, sizeof(name), "/checkpoint_%06d.json", iter + 1);
            save_checkpoint(out_dir + name, ckpt);
        }
    };

    train(cfg, callbacks);
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("episodes: must be >= 1");
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    EvalResult res = evaluate_policy(ckpt.config, ckpt.params, episodes, seed);
    nlohmann::json j;
    j["episodes"] = res.episodes;
    j["success_rate"] = res.success_rate;
    j["mean_return"] = res.mean_return;
    j["seed"] = seed;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_analyze_groups(const std::string& log_path, const std::string& iters_csv,
                       const std::string& out_path) {
    TrajectoryLog log = read_trajectory_log(log_path);
    std::vector<int> iters =
        iters_csv.empty() ? log_iterations(log) : parse_int_list(iters_csv, "--iters");
    auto histograms = analyze_groups(log, iters);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open '" + out_path + "' for writing");
        out = &file;
    }
    *out << histogram_csv_header() << "\n";
    for (const auto& h : histograms) *out << histogram_csv_row(h) << "\n";
    return 0;
}

int cmd_sweep_omega(const std::string& config_path, const std::string& omegas_csv,
                    const std::string& seeds_csv, const std::string& out_dir, int eval_episodes) {
    TrainConfig base = load_train_config(config_path);
    base.threads = env_thread_cap();
    auto omegas = parse_double_list(omegas_csv, "--omegas");
    auto seeds = parse_u64_list(seeds_csv, "--seeds");

    fs::create_directories(out_dir);
    OmegaSweepResult result = sweep_omega(base, omegas, seeds, eval_episodes, out_dir);

    std::ofstream summary(out_dir + "/summary.csv");
    if (!summary) throw std::runtime_error("cannot open summary.csv for writing");
    const std::string header = "omega,mean_final_success,sd_final_success,runs";
    summary << header << "\n";
    std::cout << header << "\n";
    for (const auto& row : result.rows) {
        std::string line = format_g9(row.omega) + "," + format_g9(row.mean_success) + "," +
                           format_g9(row.sd_success) + "," + std::to_string(row.runs);
        summary << line << "\n";
        std::cout << line << "\n";
    }
    return 0;
}

int cmd_replay(const std::string& log_path, int index) {
    TrajectoryLog log = read_trajectory_log(log_path);
    if (log.records.empty()) throw std::runtime_error("replay: log has no trajectory records");
    if (index >= static_cast<int>(log.records.size()))
        throw std::invalid_argument("replay: record index out of range (log has " +
                                    std::to_string(log.records.size()) + " records)");

    std::size_t begin = index < 0 ? 0 : static_cast<std::size_t>(index);
    std::size_t end = index < 0 ? log.records.size() : static_cast<std::size_t>(index) + 1;

    std::int64_t steps = 0;
    for (std::size_t i = begin; i < end; ++i) {
        ReplayReport rep = replay_record(log.header, log.records[i]);
        if (!rep.ok) {
            std::cerr << "replay: record " << i << " (iteration " << log.records[i].iteration
                      << ", group " << log.records[i].group << ", trajectory "
                      << log.records[i].trajectory << "): " << rep.error << "\n";
            return 4;
        }
        steps += rep.steps_checked;
    }
    std::cout << "OK, " << (end - begin) << " trajectories, " << steps << " steps verified\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale lab for critic-free group-based policy optimization"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, log_path, iters_csv, omegas_csv, seeds_csv;
    std::string analyze_out = "-";
    long long seed_override = -1;
    std::uint64_t seed = 0;
    int iters_override = -1, episodes = 64, eval_episodes = 32, replay_index = -1;
    bool log_trajectories = false, dry_run = false;

    auto* train_cmd = app.add_subcommand("train", "Run a training configuration");
    train_cmd->add_option("--config", config_path, "Config JSON path")->required();
    train_cmd->add_option("--out", out_dir, "Output directory")->required();
    train_cmd->add_option("--seed", seed_override, "Override the config seed");
    train_cmd->add_option("--iters", iters_override, "Override the iteration count");
    train_cmd->add_flag("--log-trajectories", log_trajectories, "Write trajectories.jsonl");
    train_cmd->add_flag("--dry-run", dry_run, "Validate and print the resolved config");

    auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON path")->required();
    eval_cmd->add_option("--episodes", episodes, "Number of evaluation episodes");
    eval_cmd->add_option("--seed", seed, "Evaluation seed");

    auto* analyze_cmd = app.add_subcommand("analyze-groups", "Step-group size histograms from a log");
    analyze_cmd->add_option("--log", log_path, "trajectories.jsonl path")->required();
    analyze_cmd->add_option("--iters", iters_csv, "Comma-separated iterations (default: all)");
    analyze_cmd->add_option("--out", analyze_out, "Output CSV path ('-' for stdout)");

    auto* sweep_cmd = app.add_subcommand("sweep-omega", "Train/evaluate over an omega grid");
    sweep_cmd->add_option("--config", config_path, "Base config JSON path")->required();
    sweep_cmd->add_option("--omegas", omegas_csv, "Comma-separated omega values")->required();
    sweep_cmd->add_option("--seeds", seeds_csv, "Comma-separated seeds")->required();
    sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
    sweep_cmd->add_option("--episodes", eval_episodes, "Evaluation episodes per run");

    auto* replay_cmd = app.add_subcommand("replay", "Re-execute and verify logged trajectories");
    replay_cmd->add_option("--log", log_path, "trajectories.jsonl path")->required();
    replay_cmd->add_option("--index", replay_index, "Record index (default: verify all)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(config_path, out_dir, seed_override, iters_override, log_trajectories,
                             dry_run);
        if (eval_cmd->parsed()) return cmd_eval(checkpoint_path, episodes, seed);
        if (analyze_cmd->parsed()) return cmd_analyze_groups(log_path, iters_csv, analyze_out);
        if (sweep_cmd->parsed())
            return cmd_sweep_omega(config_path, omegas_csv, seeds_csv, out_dir, eval_episodes);
        if (replay_cmd->parsed()) return cmd_replay(log_path, replay_index);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
