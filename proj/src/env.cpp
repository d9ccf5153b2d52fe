#include "gigpo/env.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "gigpo/rng.hpp"

namespace gigpo {

void validate_env_config(const EnvConfig& cfg) {
    if (cfg.name != "keydoor" && cfg.name != "pagenav")
        throw std::invalid_argument("env_name: unknown environment '" + cfg.name + "'");
    if (cfg.horizon < 1) throw std::invalid_argument("env_horizon: must be >= 1");
    if (cfg.task_pool < 1) throw std::invalid_argument("env_task_pool: must be >= 1");
    if (cfg.name == "keydoor" && cfg.grid_size < 3)
        throw std::invalid_argument("env_grid_size: must be >= 3");
    if (cfg.name == "pagenav") {
        if (cfg.num_items < 2) throw std::invalid_argument("env_num_items: must be >= 2");
        if (cfg.num_pages < 1) throw std::invalid_argument("env_num_pages: must be >= 1");
    }
}

StateKey Environment::make_key() {
    KeyEncoder enc;
    encode_observation(enc);
    if (cfg_.nonce_injection) {
        enc.field_u64(nonce_base_);
        enc.field_u32(nonce_counter_++);
    }
    return enc.finish();
}

StateKey Environment::reset(std::uint64_t task_seed) {
    done_ = false;
    success_ = false;
    steps_taken_ = 0;
    nonce_counter_ = 0;
    do_reset(task_seed);
    key_ = make_key();
    return key_;
}

StepResult Environment::step(int action) {
    if (done_) throw std::logic_error("step() called on a finished episode");
    ++steps_taken_;

    Outcome outcome = Outcome::invalid;
    if (action >= 0 && action < action_count()) outcome = do_step(action);

    StepResult res;
    switch (outcome) {
        case Outcome::invalid:
            res.reward = cfg_.invalid_penalty;
            res.valid = false;
            break;
        case Outcome::neutral:
            res.reward = 0.0;
            res.valid = true;
            break;
        case Outcome::success:
            res.reward = cfg_.success_reward;
            res.valid = true;
            success_ = true;
            break;
    }
    done_ = success_ || steps_taken_ >= cfg_.horizon;
    key_ = make_key();
    res.state_key = key_;
    res.done = done_;
    return res;
}

// ---------------------------------------------------------------------------
// KeyDoorGrid

namespace {

constexpr double kWallDensity = 0.12;
// Accepted layouts keep the shortest start->key->door path in this range so
// every task is non-trivial yet solvable well inside the default horizon.
constexpr int kMinPathLen = 4;
constexpr int kMaxPathLen = 12;

std::vector<int> bfs_distances(const std::vector<char>& walls, int n, int sx, int sy) {
    std::vector<int> dist(static_cast<std::size_t>(n) * n, -1);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(sy * n + sx)] = 0;
    queue.push_back(sy * n + sx);
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {-1, 1, 0, 0};
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int cx = cur % n, cy = cur / n;
        for (int d = 0; d < 4; ++d) {
            int nx = cx + dx[d], ny = cy + dy[d];
            if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
            int idx = ny * n + nx;
            if (walls[static_cast<std::size_t>(idx)] || dist[static_cast<std::size_t>(idx)] >= 0) continue;
            dist[static_cast<std::size_t>(idx)] = dist[static_cast<std::size_t>(cur)] + 1;
            queue.push_back(idx);
        }
    }
    return dist;
}

}  // namespace

KeyDoorGridEnv::KeyDoorGridEnv(const EnvConfig& cfg) : Environment(cfg), n_(cfg.grid_size) {
    walls_.assign(static_cast<std::size_t>(n_) * n_, 0);
}

bool KeyDoorGridEnv::generate_layout(std::uint64_t task_seed) {
    RngStream rng(mix_seed(stream::kLayout, task_seed, static_cast<std::uint64_t>(n_)));
    const int cells = n_ * n_;
    for (int attempt = 0; attempt < 200; ++attempt) {
        for (auto& w : walls_) w = rng.uniform_unit() < kWallDensity ? 1 : 0;
        int free_count = static_cast<int>(std::count(walls_.begin(), walls_.end(), 0));
        if (free_count < 3) continue;

        auto pick_free = [&]() {
            while (true) {
                int c = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cells)));
                if (!walls_[static_cast<std::size_t>(c)]) return c;
            }
        };
        int start = pick_free();
        int key = pick_free();
        int door = pick_free();
        if (start == key || key == door || start == door) continue;

        auto from_start = bfs_distances(walls_, n_, start % n_, start / n_);
        auto from_key = bfs_distances(walls_, n_, key % n_, key / n_);
        int d1 = from_start[static_cast<std::size_t>(key)];
        int d2 = from_key[static_cast<std::size_t>(door)];
        if (d1 < 1 || d2 < 1) continue;
        if (d1 + d2 < kMinPathLen || d1 + d2 > kMaxPathLen) continue;

        start_x_ = start % n_;
        start_y_ = start / n_;
        key_x_ = key % n_;
        key_y_ = key / n_;
        door_x_ = door % n_;
        door_y_ = door / n_;

        std::string layout_bytes;
        layout_bytes.reserve(walls_.size() + 8);
        layout_bytes.append(walls_.begin(), walls_.end());
        layout_bytes.push_back(static_cast<char>(key_x_));
        layout_bytes.push_back(static_cast<char>(key_y_));
        layout_bytes.push_back(static_cast<char>(door_x_));
        layout_bytes.push_back(static_cast<char>(door_y_));
        layout_bytes.push_back(static_cast<char>(n_));
        layout_digest_ = fnv1a64(layout_bytes);
        return true;
    }
    return false;
}

void KeyDoorGridEnv::do_reset(std::uint64_t task_seed) {
    if (!generate_layout(task_seed))
        throw std::runtime_error("keydoor: failed to generate a solvable layout for task seed " +
                                 std::to_string(task_seed));
    x_ = start_x_;
    y_ = start_y_;
    has_key_ = false;
}

Environment::Outcome KeyDoorGridEnv::do_step(int action) {
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {-1, 1, 0, 0};
    int nx = x_ + dx[action];
    int ny = y_ + dy[action];
    if (nx < 0 || ny < 0 || nx >= n_ || ny >= n_) return Outcome::invalid;
    if (walls_[static_cast<std::size_t>(ny * n_ + nx)]) return Outcome::invalid;

    x_ = nx;
    y_ = ny;
    if (!has_key_ && x_ == key_x_ && y_ == key_y_) has_key_ = true;
    if (has_key_ && x_ == door_x_ && y_ == door_y_) return Outcome::success;
    return Outcome::neutral;
}

void KeyDoorGridEnv::encode_observation(KeyEncoder& enc) const {
    enc.field_u8('K');
    enc.field_u8(kEnvFormatVersion);
    enc.field_u64(layout_digest_);
    enc.field_u8(static_cast<std::uint8_t>(x_));
    enc.field_u8(static_cast<std::uint8_t>(y_));
    enc.field_u8(has_key_ ? 1 : 0);
}

// ---------------------------------------------------------------------------
// PageNav

PageNavEnv::PageNavEnv(const EnvConfig& cfg) : Environment(cfg) {}

void PageNavEnv::do_reset(std::uint64_t task_seed) {
    RngStream rng(mix_seed(stream::kLayout, task_seed, 0x504eULL));
    correct_item_ = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg_.num_items)));

    std::string task_bytes;
    task_bytes.push_back(static_cast<char>(cfg_.num_items));
    task_bytes.push_back(static_cast<char>(cfg_.num_pages));
    task_bytes.push_back(static_cast<char>(correct_item_));
    task_digest_ = fnv1a64(task_bytes);

    loc_ = Location::search;
    page_ = 0;
}

Environment::Outcome PageNavEnv::do_step(int action) {
    const int next = action_next();
    const int back = action_back();
    const int buy = action_buy();

    switch (loc_) {
        case Location::search:
            if (action < cfg_.num_items) {
                // wrong items bounce straight back to the search page
                if (action == correct_item_) loc_ = Location::detail;
                return Outcome::neutral;
            }
            if (action == next) {
                loc_ = Location::page;
                page_ = 1;
                return Outcome::neutral;
            }
            return Outcome::invalid;

        case Location::detail:
            if (action == buy) {
                loc_ = Location::cart;
                return Outcome::neutral;
            }
            if (action == back) {
                loc_ = Location::search;
                return Outcome::neutral;
            }
            return Outcome::invalid;

        case Location::cart:
            if (action == buy) return Outcome::success;
            if (action == back) {
                loc_ = Location::detail;
                return Outcome::neutral;
            }
            return Outcome::invalid;

        case Location::page:
            if (action == next) {
                if (page_ < cfg_.num_pages) ++page_;  // last page reloads in place
                return Outcome::neutral;
            }
            if (action == back) {
                if (page_ > 1) {
                    --page_;
                } else {
                    loc_ = Location::search;
                    page_ = 0;
                }
                return Outcome::neutral;
            }
            if (action < cfg_.num_items) return Outcome::neutral;  // deeper-page items all bounce
            return Outcome::invalid;
    }
    return Outcome::invalid;
}

void PageNavEnv::encode_observation(KeyEncoder& enc) const {
    enc.field_u8('P');
    enc.field_u8(kEnvFormatVersion);
    enc.field_u64(task_digest_);
    enc.field_u8(static_cast<std::uint8_t>(loc_));
    switch (loc_) {
        case Location::search: {
            // item listing is a set-valued slot: canonical order before encoding
            std::vector<std::uint32_t> items;
            for (int i = 0; i < cfg_.num_items; ++i) items.push_back(static_cast<std::uint32_t>(i));
            enc.field_u32_set(items);
            break;
        }
        case Location::detail:
        case Location::cart:
            enc.field_u32(static_cast<std::uint32_t>(correct_item_));
            break;
        case Location::page:
            enc.field_u32(static_cast<std::uint32_t>(page_));
            break;
    }
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg) {
    validate_env_config(cfg);
    if (cfg.name == "keydoor") return std::make_unique<KeyDoorGridEnv>(cfg);
    return std::make_unique<PageNavEnv>(cfg);
}

}  // namespace gigpo
