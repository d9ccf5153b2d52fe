#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gigpo/advantage.hpp"
#include "gigpo/rng.hpp"
#include "oracles.hpp"

using namespace gigpo;

namespace {

StateKey key_of(const std::string& s) { return StateKey(s); }

Trajectory traj_from(const std::vector<std::string>& keys, const std::vector<double>& rewards,
                     std::uint64_t task_seed = 0) {
    REQUIRE(keys.size() == rewards.size());
    Trajectory traj;
    traj.task_seed = task_seed;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        traj.steps.push_back(StepRecord{static_cast<int>(i) + 1, key_of(keys[i]),
                                        static_cast<int>(i % 3), rewards[i], -0.5});
        traj.total_return += rewards[i];
    }
    return traj;
}

EpisodeGroup group_from_returns(const std::vector<double>& returns) {
    EpisodeGroup group;
    for (double r : returns) {
        Trajectory traj = traj_from({"s0"}, {r});
        group.trajectories.push_back(traj);
    }
    return group;
}

constexpr NormalizationFactor kStd{NormalizationFactor::Mode::std_dev, 1e-8};
constexpr NormalizationFactor kOne{NormalizationFactor::Mode::one, 1e-8};

}  // namespace

// ---------------------------------------------------------------------------
// episode advantages

TEST_CASE("identical returns give zero advantages in both modes") {
    auto group = group_from_returns({10, 10, 10, 10});
    for (const auto& norm : {kStd, kOne}) {
        for (double a : episode_advantages(group, norm)) CHECK(a == 0.0);
    }
}

TEST_CASE("episode advantages, unnormalized mode") {
    auto group = group_from_returns({10, 0, 0, 0});
    auto adv = episode_advantages(group, kOne);
    CHECK(adv[0] == doctest::Approx(7.5).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(adv[2] == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(adv[3] == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("episode advantages, std mode divides by population std + epsilon") {
    auto group = group_from_returns({10, 0, 0, 0});
    auto adv = episode_advantages(group, kStd);
    const double denom = 10.0 * std::sqrt(3.0) / 4.0 + 1e-8;  // population std of {10,0,0,0}
    CHECK(adv[0] == doctest::Approx(7.5 / denom).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(-2.5 / denom).epsilon(1e-12));
}

TEST_CASE("groups of one are rejected") {
    auto group = group_from_returns({5});
    CHECK_THROWS_AS(episode_advantages(group, kStd), std::invalid_argument);
    CHECK_THROWS_AS(rloo_advantages(group), std::invalid_argument);
}

TEST_CASE("episode advantages sum to zero") {
    RngStream rng(123);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform_below(15));
        std::vector<double> returns;
        for (int i = 0; i < n; ++i) returns.push_back(10.0 * rng.uniform_unit());
        auto group = group_from_returns(returns);
        for (const auto& norm : {kStd, kOne}) {
            auto adv = episode_advantages(group, norm);
            double sum = 0.0;
            for (double a : adv) sum += a;
            CHECK(std::abs(sum) < 1e-9);
        }
    }
}

// ---------------------------------------------------------------------------
// leave-one-out

TEST_CASE("leave-one-out advantages by hand") {
    auto group = group_from_returns({10, 0, 0, 0});
    auto adv = rloo_advantages(group);
    CHECK(adv[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(-10.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identical returns give zero leave-one-out advantages") {
    auto group = group_from_returns({3, 3, 3});
    for (double a : rloo_advantages(group)) CHECK(a == doctest::Approx(0.0));
}

TEST_CASE("rescaled unnormalized advantages equal leave-one-out exactly") {
    RngStream rng(7);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform_below(15));
        std::vector<double> returns;
        for (int i = 0; i < n; ++i) returns.push_back(10.0 * rng.uniform_unit());
        auto group = group_from_returns(returns);
        auto one = episode_advantages(group, kOne);
        auto rloo = rloo_advantages(group);
        const double scale = static_cast<double>(n) / static_cast<double>(n - 1);
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(scale * one[static_cast<std::size_t>(i)] -
                                             rloo[static_cast<std::size_t>(i)]));
    }
    CHECK(worst < 1e-12);
}

// ---------------------------------------------------------------------------
// discounted returns

TEST_CASE("discounted returns by backward recursion") {
    Trajectory traj = traj_from({"a", "b", "c"}, {0, 0, 10});
    auto r = discounted_returns(traj, 0.95);
    CHECK(r[0] == doctest::Approx(9.025).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(9.5).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("gamma one gives suffix sums") {
    Trajectory traj = traj_from({"a", "b", "c"}, {1, 2, 3});
    auto r = discounted_returns(traj, 1.0);
    CHECK(r[0] == doctest::Approx(6.0));
    CHECK(r[1] == doctest::Approx(5.0));
    CHECK(r[2] == doctest::Approx(3.0));
}

TEST_CASE("all-zero rewards give all-zero returns") {
    Trajectory traj = traj_from({"a", "b"}, {0, 0});
    for (double r : discounted_returns(traj, 0.9)) CHECK(r == 0.0);
}

TEST_CASE("discounted returns match the explicit-powers oracle") {
    RngStream rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        int len = 1 + static_cast<int>(rng.uniform_below(20));
        std::vector<std::string> keys;
        std::vector<double> rewards;
        for (int i = 0; i < len; ++i) {
            keys.push_back("k" + std::to_string(i));
            rewards.push_back(rng.uniform_unit() * 4.0 - 1.0);
        }
        double gamma = 0.5 + 0.5 * rng.uniform_unit();
        auto got = discounted_returns(traj_from(keys, rewards), gamma);
        auto want = oracle::naive_discounted_returns(rewards, gamma);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
    CHECK_THROWS_AS(discounted_returns(traj_from({"a"}, {1.0}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(discounted_returns(traj_from({"a"}, {1.0}), 1.5), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// step grouping

namespace {

EpisodeGroup two_trajectory_group() {
    EpisodeGroup group;
    group.trajectories.push_back(traj_from({"s0", "s1", "s0", "s2"}, {0, 0, 0, 1}));
    group.trajectories.push_back(traj_from({"s0", "s3"}, {0, 0}));
    return group;
}

std::map<std::string, std::vector<std::pair<int, int>>> as_partition(
    const std::vector<StepGroup>& groups) {
    std::map<std::string, std::vector<std::pair<int, int>>> out;
    for (const auto& g : groups)
        for (const auto& m : g.members) out[g.anchor.bytes].push_back({m.traj, m.t});
    return out;
}

}  // namespace

TEST_CASE("exact grouping buckets byte-equal keys") {
    auto group = two_trajectory_group();
    auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
    REQUIRE(groups.size() == 4);

    auto part = as_partition(groups);
    CHECK(part["s0"].size() == 3);
    CHECK(part["s1"].size() == 1);
    CHECK(part["s2"].size() == 1);
    CHECK(part["s3"].size() == 1);
    // anchors sorted
    CHECK(std::is_sorted(groups.begin(), groups.end(), [](const StepGroup& a, const StepGroup& b) {
        return a.anchor.bytes < b.anchor.bytes;
    }));
}

TEST_CASE("all-distinct keys give all-singleton groups") {
    EpisodeGroup group;
    group.trajectories.push_back(traj_from({"a", "b", "c"}, {0, 0, 0}));
    group.trajectories.push_back(traj_from({"d", "e"}, {0, 0}));
    auto groups = build_step_groups(group, 1.0, {GroupingMode::exact, 0.9});
    CHECK(groups.size() == 5);
    for (const auto& g : groups) CHECK(g.members.size() == 1);
}

TEST_CASE("the shared initial state forms a group of at least N") {
    EpisodeGroup group;
    for (int i = 0; i < 4; ++i)
        group.trajectories.push_back(traj_from({"root", "x" + std::to_string(i)}, {0, 0}));
    auto groups = build_step_groups(group, 1.0, {GroupingMode::exact, 0.9});
    auto part = as_partition(groups);
    CHECK(part["root"].size() >= 4);
}

TEST_CASE("exact grouping matches the quadratic oracle on random logs") {
    RngStream rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        EpisodeGroup group;
        std::vector<oracle::NaiveStep> flat;
        int n_traj = 2 + static_cast<int>(rng.uniform_below(4));
        for (int i = 0; i < n_traj; ++i) {
            int len = 1 + static_cast<int>(rng.uniform_below(30));
            std::vector<std::string> keys;
            std::vector<double> rewards;
            for (int t = 0; t < len; ++t) {
                keys.push_back("k" + std::to_string(rng.uniform_below(12)));
                rewards.push_back(rng.uniform_unit());
                flat.push_back({i, t + 1, key_of(keys.back())});
            }
            group.trajectories.push_back(traj_from(keys, rewards));
        }
        auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});

        // compare partitions as sets of member sets
        auto naive = oracle::naive_group(flat);
        std::set<std::set<std::pair<int, int>>> got, want;
        for (const auto& g : groups) {
            std::set<std::pair<int, int>> members;
            for (const auto& m : g.members) members.insert({m.traj, m.t});
            got.insert(std::move(members));
        }
        for (const auto& g : naive) {
            std::set<std::pair<int, int>> members;
            for (int idx : g)
                members.insert({flat[static_cast<std::size_t>(idx)].traj,
                                flat[static_cast<std::size_t>(idx)].t});
            want.insert(std::move(members));
        }
        REQUIRE(got == want);
    }
}

TEST_CASE("grouped members carry their trajectory's discounted returns") {
    auto group = two_trajectory_group();
    auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
    auto r0 = discounted_returns(group.trajectories[0], 0.95);
    for (const auto& g : groups)
        for (const auto& m : g.members)
            if (m.traj == 0)
                CHECK(m.disc_return == r0[static_cast<std::size_t>(m.t - 1)]);
}

// ---------------------------------------------------------------------------
// similarity

TEST_CASE("key similarity examples") {
    CHECK(key_similarity(key_of("abcdefghij"), key_of("abcdefghij")) == 1.0);
    CHECK(key_similarity(key_of("abcdefghij"), key_of("abcdefghiX")) == doctest::Approx(0.9));
    CHECK(key_similarity(key_of("abc"), key_of("xyz")) == 0.0);
    CHECK(key_similarity(key_of(""), key_of("")) == 1.0);
    CHECK(key_similarity(key_of("a"), key_of("")) == 0.0);
}

TEST_CASE("key similarity is symmetric and equals one only on byte-equal keys") {
    RngStream rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        std::string a, b;
        int la = 1 + static_cast<int>(rng.uniform_below(20));
        int lb = 1 + static_cast<int>(rng.uniform_below(20));
        for (int i = 0; i < la; ++i) a.push_back(static_cast<char>('a' + rng.uniform_below(4)));
        for (int i = 0; i < lb; ++i) b.push_back(static_cast<char>('a' + rng.uniform_below(4)));
        double sab = key_similarity(key_of(a), key_of(b));
        double sba = key_similarity(key_of(b), key_of(a));
        CHECK(sab == sba);
        CHECK(sab >= 0.0);
        CHECK(sab <= 1.0);
        if (sab == 1.0) CHECK(a == b);
    }
}

TEST_CASE("lcs length matches the recursive oracle") {
    RngStream rng(19);
    for (int rep = 0; rep < 200; ++rep) {
        std::string a, b;
        int la = static_cast<int>(rng.uniform_below(30));
        int lb = static_cast<int>(rng.uniform_below(30));
        for (int i = 0; i < la; ++i) a.push_back(static_cast<char>('a' + rng.uniform_below(3)));
        for (int i = 0; i < lb; ++i) b.push_back(static_cast<char>('a' + rng.uniform_below(3)));
        double sim = key_similarity(key_of(a), key_of(b));
        std::size_t lcs = oracle::naive_lcs_length(a, b);
        std::size_t longest = std::max(a.size(), b.size());
        if (longest == 0)
            CHECK(sim == 1.0);
        else
            CHECK(sim == doctest::Approx(static_cast<double>(lcs) / static_cast<double>(longest))
                             .epsilon(1e-15));
    }
}

TEST_CASE("similarity grouping at threshold 1 equals exact grouping") {
    RngStream rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        EpisodeGroup group;
        int n_traj = 2 + static_cast<int>(rng.uniform_below(3));
        for (int i = 0; i < n_traj; ++i) {
            int len = 1 + static_cast<int>(rng.uniform_below(12));
            std::vector<std::string> keys;
            std::vector<double> rewards;
            for (int t = 0; t < len; ++t) {
                keys.push_back("key" + std::to_string(rng.uniform_below(6)));
                rewards.push_back(rng.uniform_unit());
            }
            group.trajectories.push_back(traj_from(keys, rewards));
        }
        auto exact = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
        auto sim = build_step_groups(group, 0.95, {GroupingMode::similarity, 1.0});
        CHECK(as_partition(exact) == as_partition(sim));
    }
}

TEST_CASE("similarity grouping joins near-identical keys") {
    EpisodeGroup group;
    // 10-byte keys differing in one byte: similarity 0.9
    group.trajectories.push_back(traj_from({"abcdefghij", "abcdefghiX"}, {0, 1}));
    group.trajectories.push_back(traj_from({"abcdefghij", "0123456789"}, {0, 0}));

    auto at_09 = build_step_groups(group, 1.0, {GroupingMode::similarity, 0.9});
    auto part = as_partition(at_09);
    // the three near-identical keys cluster under the first representative
    CHECK(part["abcdefghij"].size() == 3);
    CHECK(part["0123456789"].size() == 1);

    auto at_095 = build_step_groups(group, 1.0, {GroupingMode::similarity, 0.95});
    CHECK(as_partition(at_095)["abcdefghij"].size() == 2);

    CHECK_THROWS_AS(build_step_groups(group, 1.0, {GroupingMode::similarity, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_step_groups(group, 1.0, {GroupingMode::similarity, 1.5}),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// step advantages

TEST_CASE("step advantages reproduce the shopping-page preference ordering") {
    // anchor group with discounted returns {9.025, 8.57375, 0}: the later
    // correct click beats the earlier wrong click beats paging away
    EpisodeGroup group;
    Trajectory buys;  // wrong item (bounce), correct item, add to cart, purchase
    buys = traj_from({"search", "search", "detail", "cart"}, {0, 0, 0, 10});
    Trajectory pages = traj_from({"search", "p1", "p2", "p3"}, {0, 0, 0, 0});
    group.trajectories = {buys, pages};

    auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
    for (const auto& norm : {kOne, kStd}) {
        auto adv = step_advantages(group, groups, norm);
        const double a_wrong = adv[0][0];    // search @ t1 (wrong click)
        const double a_correct = adv[0][1];  // search @ t2 (correct click)
        const double a_page = adv[1][0];     // search @ t1 (next page)
        CHECK(a_correct > a_wrong);
        CHECK(a_wrong > a_page);
    }

    // exact values, unnormalized mode
    auto adv = step_advantages(group, groups, kOne);
    const double r_correct = 10.0 * 0.95 * 0.95;
    const double r_wrong = 10.0 * 0.95 * 0.95 * 0.95;
    const double mean = (r_correct + r_wrong + 0.0) / 3.0;
    CHECK(adv[0][1] == doctest::Approx(r_correct - mean).epsilon(1e-12));
    CHECK(adv[0][0] == doctest::Approx(r_wrong - mean).epsilon(1e-12));
    CHECK(adv[1][0] == doctest::Approx(0.0 - mean).epsilon(1e-12));
    CHECK(mean == doctest::Approx(5.86625).epsilon(1e-9));
}

TEST_CASE("singleton groups yield zero step advantage in both modes") {
    EpisodeGroup group;
    group.trajectories.push_back(traj_from({"a", "b"}, {1, 2}));
    group.trajectories.push_back(traj_from({"c"}, {3}));
    auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
    for (const auto& norm : {kStd, kOne}) {
        auto adv = step_advantages(group, groups, norm);
        for (const auto& row : adv)
            for (double a : row) CHECK(a == 0.0);
    }
}

TEST_CASE("within-group step advantages are mean-zero") {
    RngStream rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        EpisodeGroup group;
        for (int i = 0; i < 4; ++i) {
            int len = 2 + static_cast<int>(rng.uniform_below(10));
            std::vector<std::string> keys;
            std::vector<double> rewards;
            for (int t = 0; t < len; ++t) {
                keys.push_back("k" + std::to_string(rng.uniform_below(5)));
                rewards.push_back(rng.uniform_unit() * 2.0 - 0.5);
            }
            group.trajectories.push_back(traj_from(keys, rewards));
        }
        auto groups = build_step_groups(group, 0.9, {GroupingMode::exact, 0.9});
        for (const auto& norm : {kStd, kOne}) {
            auto adv = step_advantages(group, groups, norm);
            for (const auto& sg : groups) {
                double sum = 0.0;
                for (const auto& m : sg.members)
                    sum += adv[static_cast<std::size_t>(m.traj)][static_cast<std::size_t>(m.t - 1)];
                CHECK(std::abs(sum) < 1e-9);
            }
        }
    }
}

TEST_CASE("normalization mode never changes within-group ordering") {
    RngStream rng(43);
    for (int rep = 0; rep < 50; ++rep) {
        EpisodeGroup group;
        for (int i = 0; i < 3; ++i) {
            int len = 2 + static_cast<int>(rng.uniform_below(8));
            std::vector<std::string> keys;
            std::vector<double> rewards;
            for (int t = 0; t < len; ++t) {
                keys.push_back("k" + std::to_string(rng.uniform_below(4)));
                rewards.push_back(rng.uniform_unit());
            }
            group.trajectories.push_back(traj_from(keys, rewards));
        }
        auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
        auto a_std = step_advantages(group, groups, kStd);
        auto a_one = step_advantages(group, groups, kOne);
        for (const auto& sg : groups) {
            for (std::size_t x = 0; x < sg.members.size(); ++x) {
                for (std::size_t y = x + 1; y < sg.members.size(); ++y) {
                    const auto& mx = sg.members[x];
                    const auto& my = sg.members[y];
                    double sx = a_std[static_cast<std::size_t>(mx.traj)][static_cast<std::size_t>(mx.t - 1)];
                    double sy = a_std[static_cast<std::size_t>(my.traj)][static_cast<std::size_t>(my.t - 1)];
                    double ox = a_one[static_cast<std::size_t>(mx.traj)][static_cast<std::size_t>(mx.t - 1)];
                    double oy = a_one[static_cast<std::size_t>(my.traj)][static_cast<std::size_t>(my.t - 1)];
                    // positive rescaling preserves order
                    CHECK(((sx < sy) == (ox < oy)));
                    CHECK(((sx > sy) == (ox > oy)));
                }
            }
        }
        // episode level too
        auto e_std = episode_advantages(group, kStd);
        auto e_one = episode_advantages(group, kOne);
        for (std::size_t x = 0; x < e_std.size(); ++x)
            for (std::size_t y = x + 1; y < e_std.size(); ++y) {
                CHECK(((e_std[x] < e_std[y]) == (e_one[x] < e_one[y])));
            }
    }
}

TEST_CASE("step advantages agree with the naive formula per group") {
    RngStream rng(47);
    for (int rep = 0; rep < 100; ++rep) {
        EpisodeGroup group;
        for (int i = 0; i < 3; ++i) {
            int len = 1 + static_cast<int>(rng.uniform_below(10));
            std::vector<std::string> keys;
            std::vector<double> rewards;
            for (int t = 0; t < len; ++t) {
                keys.push_back("k" + std::to_string(rng.uniform_below(4)));
                rewards.push_back(rng.uniform_unit() * 10.0);
            }
            group.trajectories.push_back(traj_from(keys, rewards));
        }
        auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
        for (auto mode : {NormalizationFactor::Mode::std_dev, NormalizationFactor::Mode::one}) {
            NormalizationFactor norm{mode, 1e-8};
            auto adv = step_advantages(group, groups, norm);
            for (const auto& sg : groups) {
                if (sg.members.size() < 2) continue;
                std::vector<double> returns;
                for (const auto& m : sg.members) returns.push_back(m.disc_return);
                auto want = oracle::naive_advantages(
                    returns,
                    mode == NormalizationFactor::Mode::std_dev ? oracle::NaiveMode::std_dev
                                                               : oracle::NaiveMode::one);
                for (std::size_t k = 0; k < sg.members.size(); ++k) {
                    const auto& m = sg.members[k];
                    double got = adv[static_cast<std::size_t>(m.traj)][static_cast<std::size_t>(m.t - 1)];
                    CHECK(std::abs(got - want[k]) < 1e-12);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// combination

TEST_CASE("combined advantage arithmetic") {
    std::vector<double> episode{0.5, -0.5};
    StepValues step{{-0.25, 0.1}, {0.0}};
    auto combined = combine(episode, step, 1.0);
    CHECK(combined[0][0] == doctest::Approx(0.25));
    CHECK(combined[0][1] == doctest::Approx(0.6));
    CHECK(combined[1][0] == doctest::Approx(-0.5));
    CHECK_THROWS_AS(combine(episode, step, -0.1), std::invalid_argument);
}

TEST_CASE("omega zero broadcasts the episode advantage bitwise") {
    std::vector<double> episode{0.125, -3.5, 0.0};
    StepValues step{{1.0, -2.0}, {0.5}, {9.0, 9.0, 9.0}};
    auto combined = combine(episode, step, 0.0);
    for (std::size_t i = 0; i < episode.size(); ++i)
        for (double c : combined[i]) CHECK(c == episode[i]);
}

TEST_CASE("all-singleton groups make the combination omega-independent") {
    EpisodeGroup group;
    group.trajectories.push_back(traj_from({"a", "b"}, {0, 1}));
    group.trajectories.push_back(traj_from({"c", "d"}, {0, 5}));
    auto groups = build_step_groups(group, 0.95, {GroupingMode::exact, 0.9});
    auto episode = episode_advantages(group, kStd);
    auto step = step_advantages(group, groups, kStd);
    for (double omega : {0.0, 0.5, 1.0, 2.0}) {
        auto combined = combine(episode, step, omega);
        for (std::size_t i = 0; i < combined.size(); ++i)
            for (double c : combined[i]) CHECK(c == episode[i]);
    }
}
