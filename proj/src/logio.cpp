#include "gigpo/logio.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace gigpo {

using nlohmann::json;

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// metrics.csv

const char* MetricsWriter::header() {
    return "iteration,success_rate,mean_return,mean_len,frac_singleton_groups,mean_group_size,"
           "mean_kl,loss,t_rollout_s,t_grouping_s,t_advantage_s,t_update_s";
}

std::string MetricsWriter::format_row(const IterationReport& r) {
    std::string row = std::to_string(r.iteration);
    const double cols[] = {r.success_rate, r.mean_return,   r.mean_length,    r.frac_singleton_groups,
                           r.mean_group_size, r.mean_kl,    r.loss,           r.t_rollout_s,
                           r.t_grouping_s,    r.t_advantage_s, r.t_update_s};
    for (double c : cols) {
        row.push_back(',');
        row += format_g9(c);
    }
    return row;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("metrics: cannot open '" + path + "' for writing");
    out_ << header() << "\n";
    out_.flush();
}

void MetricsWriter::write_row(const IterationReport& r) {
    out_ << format_row(r) << "\n";
    out_.flush();
}

// ---------------------------------------------------------------------------
// trajectory JSONL

namespace {

json header_to_json(const TrajectoryLogHeader& h) {
    json j;
    j["kind"] = "header";
    j["format_version"] = h.format_version;
    j["config_hash"] = h.config_hash;
    j["gamma"] = h.gamma;
    j["grouping"] = h.grouping.mode == GroupingMode::exact ? "exact" : "similarity";
    j["similarity_threshold"] = h.grouping.threshold;
    json env;
    env["name"] = h.env.name;
    env["horizon"] = h.env.horizon;
    env["success_reward"] = h.env.success_reward;
    env["invalid_penalty"] = h.env.invalid_penalty;
    env["nonce_injection"] = h.env.nonce_injection;
    env["task_pool"] = h.env.task_pool;
    env["grid_size"] = h.env.grid_size;
    env["num_items"] = h.env.num_items;
    env["num_pages"] = h.env.num_pages;
    env["format_version"] = kEnvFormatVersion;
    j["env"] = env;
    return j;
}

TrajectoryLogHeader header_from_json(const json& j) {
    TrajectoryLogHeader h;
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kLogFormatVersion)
        throw std::runtime_error("trajectory log: unsupported format version");
    h.config_hash = j.at("config_hash").get<std::string>();
    h.gamma = j.at("gamma").get<double>();
    h.grouping.mode =
        j.at("grouping").get<std::string>() == "exact" ? GroupingMode::exact : GroupingMode::similarity;
    h.grouping.threshold = j.at("similarity_threshold").get<double>();
    const json& env = j.at("env");
    if (env.at("format_version").get<int>() != kEnvFormatVersion)
        throw std::runtime_error("trajectory log: environment version mismatch");
    h.env.name = env.at("name").get<std::string>();
    h.env.horizon = env.at("horizon").get<int>();
    h.env.success_reward = env.at("success_reward").get<double>();
    h.env.invalid_penalty = env.at("invalid_penalty").get<double>();
    h.env.nonce_injection = env.at("nonce_injection").get<bool>();
    h.env.task_pool = env.at("task_pool").get<int>();
    h.env.grid_size = env.at("grid_size").get<int>();
    h.env.num_items = env.at("num_items").get<int>();
    h.env.num_pages = env.at("num_pages").get<int>();
    return h;
}

}  // namespace

TrajectoryLogWriter::TrajectoryLogWriter(const std::string& path, const TrajectoryLogHeader& header)
    : out_(path) {
    if (!out_) throw std::runtime_error("trajectory log: cannot open '" + path + "' for writing");
    out_ << header_to_json(header).dump() << "\n";
}

void TrajectoryLogWriter::write_iteration(int iteration, const std::vector<EpisodeGroup>& groups) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            const auto& traj = group.trajectories[i];
            json rec;
            rec["iteration"] = iteration;
            rec["group"] = static_cast<int>(g);
            rec["trajectory"] = static_cast<int>(i);
            rec["task_seed"] = traj.task_seed;
            rec["success"] = traj.success;
            rec["total_return"] = traj.total_return;
            json steps = json::array();
            for (const auto& s : traj.steps)
                steps.push_back(json::array(
                    {s.t, to_hex(s.state_key.bytes), s.action, s.reward, s.logprob_old}));
            rec["steps"] = steps;
            out_ << rec.dump() << "\n";
        }
    }
    out_.flush();
}

TrajectoryLog read_trajectory_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("trajectory log: cannot open '" + path + "'");

    TrajectoryLog log;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("trajectory log: parse error at line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        if (!have_header) {
            if (j.value("kind", "") != "header")
                throw std::runtime_error("trajectory log: first record must be the header");
            log.header = header_from_json(j);
            have_header = true;
            continue;
        }
        TrajectoryLogRecord rec;
        rec.iteration = j.at("iteration").get<int>();
        rec.group = j.at("group").get<int>();
        rec.trajectory = j.at("trajectory").get<int>();
        rec.task_seed = j.at("task_seed").get<std::uint64_t>();
        rec.success = j.at("success").get<bool>();
        rec.total_return = j.at("total_return").get<double>();
        for (const auto& s : j.at("steps")) {
            StepRecord step;
            step.t = s.at(0).get<int>();
            step.state_key = StateKey(from_hex(s.at(1).get<std::string>()));
            step.action = s.at(2).get<int>();
            step.reward = s.at(3).get<double>();
            step.logprob_old = s.at(4).get<double>();
            rec.steps.push_back(std::move(step));
        }
        log.records.push_back(std::move(rec));
    }
    if (!have_header) throw std::runtime_error("trajectory log: missing header record");
    return log;
}

ReplayReport replay_record(const TrajectoryLogHeader& header, const TrajectoryLogRecord& record) {
    ReplayReport report;
    auto env = make_environment(header.env);
    env->set_nonce_base(nonce_base_for(record.task_seed, record.trajectory));
    StateKey key = env->reset(record.task_seed);

    double total = 0.0;
    for (const auto& step : record.steps) {
        if (key != step.state_key) {
            report.ok = false;
            report.error = "state key diverges at step " + std::to_string(step.t);
            return report;
        }
        if (env->done()) {
            report.ok = false;
            report.error = "episode ended before logged step " + std::to_string(step.t);
            return report;
        }
        StepResult res = env->step(step.action);
        if (res.reward != step.reward) {
            report.ok = false;
            report.error = "reward diverges at step " + std::to_string(step.t) + " (logged " +
                           format_g9(step.reward) + ", replayed " + format_g9(res.reward) + ")";
            return report;
        }
        key = res.state_key;
        total += res.reward;
        ++report.steps_checked;
    }
    if (!env->done()) {
        report.ok = false;
        report.error = "episode not finished after logged steps";
        return report;
    }
    if (env->succeeded() != record.success) {
        report.ok = false;
        report.error = "success flag diverges";
        return report;
    }
    if (total != record.total_return) {
        report.ok = false;
        report.error = "total return diverges";
        return report;
    }
    return report;
}

// ---------------------------------------------------------------------------
// group size histograms

int histogram_bucket(std::int64_t group_size) {
    if (group_size <= 1) return 0;
    if (group_size <= 5) return 1;
    if (group_size <= 9) return 2;
    if (group_size <= 49) return 3;
    return 4;
}

std::string histogram_csv_header() {
    return "iteration,total_groups,total_steps,frac_singleton,mean_group_size,"
           "count_1,count_2_5,count_6_9,count_10_49,count_ge50,"
           "frac_1,frac_2_5,frac_6_9,frac_10_49,frac_ge50";
}

std::string histogram_csv_row(const GroupSizeHistogram& h) {
    std::string row = std::to_string(h.iteration);
    row += "," + std::to_string(h.total_groups);
    row += "," + std::to_string(h.total_steps);
    row += "," + format_g9(h.frac_singleton);
    row += "," + format_g9(h.mean_group_size);
    for (int b = 0; b < 5; ++b) row += "," + std::to_string(h.count[b]);
    for (int b = 0; b < 5; ++b) row += "," + format_g9(h.frac[b]);
    return row;
}

}  // namespace gigpo
