#include "gigpo/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace gigpo {

namespace {

double population_std(const std::vector<double>& values, double mean) {
    double acc = 0.0;
    for (double v : values) {
        double d = v - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(values.size()));
}

double normalizer(const NormalizationFactor& norm, const std::vector<double>& values, double mean) {
    if (norm.mode == NormalizationFactor::Mode::one) return 1.0;
    return population_std(values, mean) + norm.epsilon;
}

// Open-addressing map from state key to group index. Keys carry their hash,
// so probing never rehashes the bytes; this is the hot path of the grouping
// phase.
class KeyIndexMap {
public:
    explicit KeyIndexMap(std::size_t expected) {
        std::size_t cap = 16;
        while (cap < expected * 2) cap <<= 1;
        slots_.assign(cap, Slot{nullptr, -1});
        mask_ = cap - 1;
    }

    // returns the index stored for the key, inserting next_index if absent
    int find_or_insert(const StateKey& key, int next_index) {
        std::size_t pos = static_cast<std::size_t>(key.hash) & mask_;
        while (slots_[pos].key != nullptr) {
            if (slots_[pos].key->hash == key.hash && slots_[pos].key->bytes == key.bytes)
                return slots_[pos].index;
            pos = (pos + 1) & mask_;
        }
        slots_[pos] = Slot{&key, next_index};
        return next_index;
    }

private:
    struct Slot {
        const StateKey* key;
        int index;
    };
    std::vector<Slot> slots_;
    std::size_t mask_ = 0;
};

}  // namespace

std::vector<double> episode_advantages(const EpisodeGroup& group, const NormalizationFactor& norm) {
    const int n = group.size();
    if (n < 2) throw std::invalid_argument("episode_advantages: group size must be >= 2");
    if (norm.epsilon <= 0.0) throw std::invalid_argument("episode_advantages: epsilon must be > 0");

    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(n));
    for (const auto& traj : group.trajectories) returns.push_back(traj.total_return);

    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(n);

    const double denom = normalizer(norm, returns, mean);
    std::vector<double> adv(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) adv[i] = (returns[i] - mean) / denom;
    return adv;
}

std::vector<double> rloo_advantages(const EpisodeGroup& group) {
    const int n = group.size();
    if (n < 2) throw std::invalid_argument("rloo_advantages: group size must be >= 2");

    double total = 0.0;
    for (const auto& traj : group.trajectories) total += traj.total_return;

    std::vector<double> adv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double r = group.trajectories[static_cast<std::size_t>(i)].total_return;
        adv[static_cast<std::size_t>(i)] = r - (total - r) / static_cast<double>(n - 1);
    }
    return adv;
}

std::vector<double> discounted_returns(const Trajectory& traj, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("discounted_returns: gamma must lie in (0, 1]");
    std::vector<double> out(traj.steps.size());
    double acc = 0.0;
    for (std::size_t k = traj.steps.size(); k > 0; --k) {
        acc = traj.steps[k - 1].reward + gamma * acc;
        out[k - 1] = acc;
    }
    return out;
}

double key_similarity(const StateKey& a, const StateKey& b) {
    const std::string& x = a.bytes;
    const std::string& y = b.bytes;
    const std::size_t m = x.size(), n = y.size();
    const std::size_t longest = std::max(m, n);
    if (longest == 0) return 1.0;
    if (m == 0 || n == 0) return 0.0;

    // two-row LCS table
    std::vector<std::uint32_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (x[i - 1] == y[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[n]) / static_cast<double>(longest);
}

namespace {

std::vector<StepGroup> build_exact(const EpisodeGroup& group, double gamma) {
    std::size_t total_steps = 0;
    for (const auto& traj : group.trajectories) total_steps += traj.steps.size();

    KeyIndexMap index(total_steps);
    std::vector<const StateKey*> anchors;
    std::vector<int> step_to_group;
    step_to_group.reserve(total_steps);
    std::vector<std::size_t> counts;

    for (const auto& traj : group.trajectories) {
        for (const auto& step : traj.steps) {
            int next = static_cast<int>(anchors.size());
            int g = index.find_or_insert(step.state_key, next);
            if (g == next) {
                anchors.push_back(&step.state_key);
                counts.push_back(0);
            }
            step_to_group.push_back(g);
            ++counts[static_cast<std::size_t>(g)];
        }
    }

    std::vector<StepGroup> groups(anchors.size());
    for (std::size_t g = 0; g < anchors.size(); ++g) {
        groups[g].anchor = *anchors[g];
        groups[g].members.reserve(counts[g]);
    }

    std::size_t flat = 0;
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& traj = group.trajectories[i];
        const auto returns = discounted_returns(traj, gamma);
        for (std::size_t s = 0; s < traj.steps.size(); ++s) {
            const auto& step = traj.steps[s];
            auto& dst = groups[static_cast<std::size_t>(step_to_group[flat++])];
            dst.members.push_back(StepGroupMember{static_cast<int>(i), step.t, step.action, returns[s]});
        }
    }
    return groups;
}

std::vector<StepGroup> build_similarity(const EpisodeGroup& group, double gamma, double threshold) {
    // Distinct keys first, so each (key, representative) similarity is
    // evaluated once no matter how often the key recurs.
    std::size_t total_steps = 0;
    for (const auto& traj : group.trajectories) total_steps += traj.steps.size();

    KeyIndexMap index(total_steps);
    std::vector<const StateKey*> distinct;
    std::vector<int> key_to_cluster;  // aligned with distinct, -1 = unassigned
    std::vector<int> step_key_id;
    step_key_id.reserve(total_steps);

    for (const auto& traj : group.trajectories) {
        for (const auto& step : traj.steps) {
            int next = static_cast<int>(distinct.size());
            int id = index.find_or_insert(step.state_key, next);
            if (id == next) {
                distinct.push_back(&step.state_key);
                key_to_cluster.push_back(-1);
            }
            step_key_id.push_back(id);
        }
    }

    std::vector<const StateKey*> representatives;
    for (std::size_t id = 0; id < distinct.size(); ++id) {
        // distinct keys appear here in first-occurrence (traj, t) order
        int assigned = -1;
        for (std::size_t c = 0; c < representatives.size(); ++c) {
            if (key_similarity(*distinct[id], *representatives[c]) >= threshold) {
                assigned = static_cast<int>(c);
                break;
            }
        }
        if (assigned < 0) {
            assigned = static_cast<int>(representatives.size());
            representatives.push_back(distinct[id]);
        }
        key_to_cluster[id] = assigned;
    }

    std::vector<StepGroup> groups(representatives.size());
    for (std::size_t c = 0; c < representatives.size(); ++c) groups[c].anchor = *representatives[c];

    std::size_t flat = 0;
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& traj = group.trajectories[i];
        const auto returns = discounted_returns(traj, gamma);
        for (std::size_t s = 0; s < traj.steps.size(); ++s) {
            const auto& step = traj.steps[s];
            int c = key_to_cluster[static_cast<std::size_t>(step_key_id[flat++])];
            groups[static_cast<std::size_t>(c)].members.push_back(
                StepGroupMember{static_cast<int>(i), step.t, step.action, returns[s]});
        }
    }
    return groups;
}

}  // namespace

std::vector<StepGroup> build_step_groups(const EpisodeGroup& group, double gamma,
                                         const GroupingConfig& grouping) {
    for (const auto& traj : group.trajectories)
        if (traj.steps.empty()) throw std::invalid_argument("build_step_groups: empty trajectory");

    std::vector<StepGroup> groups;
    if (grouping.mode == GroupingMode::exact) {
        groups = build_exact(group, gamma);
    } else {
        if (!(grouping.threshold > 0.0 && grouping.threshold <= 1.0))
            throw std::invalid_argument("similarity_threshold: must lie in (0, 1]");
        groups = build_similarity(group, gamma, grouping.threshold);
    }
    std::sort(groups.begin(), groups.end(),
              [](const StepGroup& a, const StepGroup& b) { return a.anchor.bytes < b.anchor.bytes; });
    return groups;
}

StepValues step_advantages(const EpisodeGroup& group, const std::vector<StepGroup>& groups,
                           const NormalizationFactor& norm) {
    if (norm.epsilon <= 0.0) throw std::invalid_argument("step_advantages: epsilon must be > 0");

    StepValues adv(group.trajectories.size());
    std::size_t total_steps = 0;
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        adv[i].assign(group.trajectories[i].steps.size(), 0.0);
        total_steps += group.trajectories[i].steps.size();
    }

    std::size_t covered = 0;
    std::vector<double> returns;
    for (const auto& sg : groups) {
        covered += sg.members.size();
        if (sg.members.size() <= 1) continue;  // singleton: no peers, advantage 0

        returns.clear();
        for (const auto& m : sg.members) returns.push_back(m.disc_return);
        double mean = 0.0;
        for (double r : returns) mean += r;
        mean /= static_cast<double>(returns.size());
        const double denom = normalizer(norm, returns, mean);

        for (const auto& m : sg.members)
            adv[static_cast<std::size_t>(m.traj)][static_cast<std::size_t>(m.t - 1)] =
                (m.disc_return - mean) / denom;
    }
    if (covered != total_steps)
        throw std::logic_error("step_advantages: step groups do not cover every step exactly once");
    return adv;
}

StepValues combine(const std::vector<double>& episode_adv, const StepValues& step_adv, double omega) {
    if (omega < 0.0) throw std::invalid_argument("omega: must be >= 0");
    if (episode_adv.size() != step_adv.size())
        throw std::invalid_argument("combine: trajectory counts disagree");

    StepValues combined(step_adv.size());
    for (std::size_t i = 0; i < step_adv.size(); ++i) {
        combined[i].resize(step_adv[i].size());
        for (std::size_t t = 0; t < step_adv[i].size(); ++t)
            combined[i][t] = episode_adv[i] + omega * step_adv[i][t];
    }
    return combined;
}

}  // namespace gigpo
