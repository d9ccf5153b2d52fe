#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gigpo/trainer.hpp"

namespace gigpo {

inline constexpr int kLogFormatVersion = 1;

// 9 significant digits, '.' decimal, no grouping
std::string format_g9(double v);

// metrics.csv: one row per training iteration, fixed column order. The four
// t_*_s columns are measured wall clock and are the only fields that vary
// between reruns of the same seeded config.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path);

    void write_row(const IterationReport& r);

    static const char* header();
    static std::string format_row(const IterationReport& r);

private:
    std::ofstream out_;
};

struct TrajectoryLogHeader {
    int format_version = kLogFormatVersion;
    EnvConfig env;
    std::string config_hash;
    double gamma = 0.95;
    GroupingConfig grouping;
};

struct TrajectoryLogRecord {
    int iteration = 0;
    int group = 0;
    int trajectory = 0;
    std::uint64_t task_seed = 0;
    bool success = false;
    double total_return = 0.0;
    std::vector<StepRecord> steps;
};

class TrajectoryLogWriter {
public:
    TrajectoryLogWriter(const std::string& path, const TrajectoryLogHeader& header);

    void write_iteration(int iteration, const std::vector<EpisodeGroup>& groups);

private:
    std::ofstream out_;
};

struct TrajectoryLog {
    TrajectoryLogHeader header;
    std::vector<TrajectoryLogRecord> records;
};

TrajectoryLog read_trajectory_log(const std::string& path);

struct ReplayReport {
    bool ok = true;
    int steps_checked = 0;
    std::string error;  // first divergence, when !ok
};

// Re-executes the logged actions from the logged task seed and checks state
// keys and rewards byte-for-byte at every step.
ReplayReport replay_record(const TrajectoryLogHeader& header, const TrajectoryLogRecord& record);

struct GroupSizeHistogram {
    int iteration = 0;
    std::int64_t total_groups = 0;
    std::int64_t total_steps = 0;
    double frac_singleton = 0.0;
    double mean_group_size = 0.0;
    // buckets: size 1, 2-5, 6-9, 10-49, >=50
    std::int64_t count[5] = {0, 0, 0, 0, 0};
    double frac[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
};

int histogram_bucket(std::int64_t group_size);

std::string histogram_csv_header();
std::string histogram_csv_row(const GroupSizeHistogram& h);

}  // namespace gigpo
