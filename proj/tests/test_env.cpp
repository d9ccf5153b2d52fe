#include "doctest.h"

#include <algorithm>
#include <set>

#include "gigpo/env.hpp"
#include "gigpo/rng.hpp"

using namespace gigpo;

namespace {

EnvConfig keydoor_config() {
    EnvConfig cfg;
    cfg.name = "keydoor";
    cfg.grid_size = 6;
    return cfg;
}

EnvConfig pagenav_config() {
    EnvConfig cfg;
    cfg.name = "pagenav";
    cfg.num_items = 3;
    cfg.num_pages = 6;
    return cfg;
}

// random-walks an env and records (key, action, reward) for replay checks
struct WalkLog {
    std::vector<StateKey> keys;  // key before each action
    std::vector<int> actions;
    std::vector<double> rewards;
};

WalkLog random_walk(Environment& env, std::uint64_t task_seed, std::uint64_t rng_seed) {
    WalkLog log;
    StateKey key = env.reset(task_seed);
    RngStream rng(rng_seed);
    while (!env.done()) {
        int a = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(env.action_count())));
        log.keys.push_back(key);
        log.actions.push_back(a);
        StepResult res = env.step(a);
        log.rewards.push_back(res.reward);
        key = res.state_key;
    }
    return log;
}

}  // namespace

TEST_CASE("reset is deterministic per (spec, task_seed)") {
    auto env1 = make_environment(keydoor_config());
    auto env2 = make_environment(keydoor_config());
    CHECK(env1->reset(7) == env2->reset(7));

    auto pn1 = make_environment(pagenav_config());
    auto pn2 = make_environment(pagenav_config());
    CHECK(pn1->reset(0) == pn2->reset(0));
}

TEST_CASE("different task seeds can change the layout") {
    auto env = make_environment(keydoor_config());
    std::set<std::string> keys;
    for (std::uint64_t seed = 0; seed < 8; ++seed) keys.insert(env->reset(seed).bytes);
    CHECK(keys.size() > 1);
}

TEST_CASE("invalid env specs name the offending field") {
    EnvConfig cfg = keydoor_config();
    cfg.grid_size = 1;
    CHECK_THROWS_WITH_AS(static_cast<void>(make_environment(cfg)), doctest::Contains("env_grid_size"),
                         std::invalid_argument);

    cfg = pagenav_config();
    cfg.num_items = 1;
    CHECK_THROWS_WITH_AS(static_cast<void>(make_environment(cfg)), doctest::Contains("env_num_items"),
                         std::invalid_argument);

    cfg = keydoor_config();
    cfg.name = "labyrinth";
    CHECK_THROWS_WITH_AS(static_cast<void>(make_environment(cfg)), doctest::Contains("env_name"),
                         std::invalid_argument);
}

TEST_CASE("invalid actions: penalty, unchanged key, episode continues") {
    EnvConfig cfg = keydoor_config();
    auto env = make_environment(cfg);
    // find a seed/state where some move is invalid (walls or the grid edge
    // guarantee one within a few steps of a random walk)
    bool found = false;
    for (std::uint64_t seed = 0; seed < 4 && !found; ++seed) {
        StateKey key = env->reset(seed);
        RngStream rng(seed);
        while (!env->done()) {
            int a = static_cast<int>(rng.uniform_below(4));
            StepResult res = env->step(a);
            if (!res.valid) {
                CHECK(res.reward == cfg.invalid_penalty);
                CHECK(res.state_key == key);
                found = true;
                break;
            }
            key = res.state_key;
        }
    }
    CHECK(found);
}

TEST_CASE("out-of-range action ids are invalid actions, not errors") {
    auto env = make_environment(keydoor_config());
    StateKey key = env->reset(3);
    StepResult res = env->step(99);
    CHECK(!res.valid);
    CHECK(res.reward == doctest::Approx(-0.1));
    CHECK(res.state_key == key);
    res = env->step(-1);
    CHECK(!res.valid);
}

namespace {

// shortest-path actions from the agent's position to (tx, ty), BFS over the
// exposed wall map
std::vector<int> bfs_actions(const KeyDoorGridEnv& env, int n, int tx, int ty) {
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {-1, 1, 0, 0};
    std::vector<int> from(static_cast<std::size_t>(n * n), -1);
    std::vector<int> via(static_cast<std::size_t>(n * n), -1);
    std::vector<int> queue;
    int start = env.agent_y() * n + env.agent_x();
    from[static_cast<std::size_t>(start)] = start;
    queue.push_back(start);
    for (std::size_t q = 0; q < queue.size(); ++q) {
        int cur = queue[q];
        for (int a = 0; a < 4; ++a) {
            int nx = cur % n + dx[a], ny = cur / n + dy[a];
            if (nx < 0 || ny < 0 || nx >= n || ny >= n || env.is_wall(nx, ny)) continue;
            int idx = ny * n + nx;
            if (from[static_cast<std::size_t>(idx)] >= 0) continue;
            from[static_cast<std::size_t>(idx)] = cur;
            via[static_cast<std::size_t>(idx)] = a;
            queue.push_back(idx);
        }
    }
    std::vector<int> actions;
    int cur = ty * n + tx;
    REQUIRE(from[static_cast<std::size_t>(cur)] >= 0);  // accepted layouts are connected
    while (cur != start) {
        actions.push_back(via[static_cast<std::size_t>(cur)]);
        cur = from[static_cast<std::size_t>(cur)];
    }
    std::reverse(actions.begin(), actions.end());
    return actions;
}

}  // namespace

TEST_CASE("success pays the terminal reward and sets done") {
    EnvConfig cfg = keydoor_config();
    cfg.horizon = 64;
    KeyDoorGridEnv env(cfg);
    env.reset(5);

    for (int a : bfs_actions(env, cfg.grid_size, env.key_x(), env.key_y()))
        REQUIRE(env.step(a).valid);
    CHECK(env.has_key());
    REQUIRE(!env.done());

    auto to_door = bfs_actions(env, cfg.grid_size, env.door_x(), env.door_y());
    REQUIRE(!to_door.empty());
    double final_reward = 0.0;
    for (int a : to_door) {
        StepResult res = env.step(a);
        REQUIRE(res.valid);
        final_reward = res.reward;
    }
    CHECK(final_reward == doctest::Approx(10.0));
    CHECK(env.done());
    CHECK(env.succeeded());
    CHECK_THROWS_AS(env.step(0), std::logic_error);
}

TEST_CASE("horizon terminates episodes") {
    EnvConfig cfg = keydoor_config();
    cfg.horizon = 5;
    auto env = make_environment(cfg);
    env->reset(11);
    int steps = 0;
    while (!env->done()) {
        env->step(0);
        ++steps;
    }
    CHECK(steps == 5);
    CHECK(!env->succeeded());
}

TEST_CASE("replaying a logged walk reproduces keys and rewards exactly") {
    for (const auto& cfg : {keydoor_config(), pagenav_config()}) {
        auto env_a = make_environment(cfg);
        WalkLog log = random_walk(*env_a, 13, 99);

        auto env_b = make_environment(cfg);
        StateKey key = env_b->reset(13);
        for (std::size_t i = 0; i < log.actions.size(); ++i) {
            REQUIRE(key == log.keys[i]);
            StepResult res = env_b->step(log.actions[i]);
            REQUIRE(res.reward == log.rewards[i]);
            key = res.state_key;
        }
        CHECK(env_b->done());
    }
}

TEST_CASE("pagenav initial key encodes the search root") {
    PageNavEnv env(pagenav_config());
    env.reset(0);
    CHECK(env.location() == PageNavEnv::Location::search);
    // fields: tag, version, digest, location, item set
    const std::string& bytes = env.current_key().bytes;
    REQUIRE(bytes.size() > 14);
    CHECK(bytes[1] == 'P');
    CHECK(bytes[14] == static_cast<char>(PageNavEnv::Location::search));
}

TEST_CASE("pagenav purchase flow and wrong-item bounce") {
    EnvConfig cfg = pagenav_config();
    PageNavEnv env(cfg);
    StateKey root = env.reset(0);
    const int correct = env.correct_item();
    const int wrong = (correct + 1) % cfg.num_items;

    // wrong item: back to the search page in one step, same key
    StepResult res = env.step(env.action_click(wrong));
    CHECK(res.valid);
    CHECK(res.reward == 0.0);
    CHECK(res.state_key == root);

    // correct item -> detail -> cart -> purchase
    res = env.step(env.action_click(correct));
    CHECK(env.location() == PageNavEnv::Location::detail);
    res = env.step(env.action_buy());
    CHECK(env.location() == PageNavEnv::Location::cart);
    res = env.step(env.action_buy());
    CHECK(res.reward == doctest::Approx(10.0));
    CHECK(res.done);
    CHECK(env.succeeded());
}

TEST_CASE("pagenav page chain dead-ends but allows backtracking") {
    EnvConfig cfg = pagenav_config();
    cfg.num_pages = 2;
    PageNavEnv env(cfg);
    StateKey root = env.reset(1);

    auto p1 = env.step(env.action_next());
    auto p2 = env.step(env.action_next());
    auto p2_again = env.step(env.action_next());  // last page reloads in place
    CHECK(p2_again.state_key == p2.state_key);
    CHECK(p2_again.valid);
    CHECK(p2_again.reward == 0.0);

    auto back1 = env.step(env.action_back());
    CHECK(back1.state_key == p1.state_key);
    auto back0 = env.step(env.action_back());
    CHECK(back0.state_key == root);
}

TEST_CASE("nonce injection makes every key unique") {
    for (auto base_cfg : {keydoor_config(), pagenav_config()}) {
        base_cfg.nonce_injection = true;
        auto env = make_environment(base_cfg);
        env->set_nonce_base(42);
        std::set<std::string> seen;
        StateKey key = env->reset(3);
        seen.insert(key.bytes);
        RngStream rng(5);
        while (!env->done()) {
            int a = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(env->action_count())));
            StepResult res = env->step(a);
            CHECK(seen.insert(res.state_key.bytes).second);  // never repeats
        }
    }
}

TEST_CASE("nonce streams replay deterministically") {
    EnvConfig cfg = keydoor_config();
    cfg.nonce_injection = true;
    auto env1 = make_environment(cfg);
    auto env2 = make_environment(cfg);
    env1->set_nonce_base(77);
    env2->set_nonce_base(77);
    CHECK(env1->reset(4) == env2->reset(4));
    auto r1 = env1->step(2);
    auto r2 = env2->step(2);
    CHECK(r1.state_key == r2.state_key);
}
