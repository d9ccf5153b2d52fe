#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gigpo/state_key.hpp"

namespace gigpo {

inline constexpr int kEnvFormatVersion = 1;

struct EnvConfig {
    std::string name = "keydoor";  // "keydoor" | "pagenav"
    int horizon = 30;
    double success_reward = 10.0;
    double invalid_penalty = -0.1;
    bool nonce_injection = false;
    int task_pool = 8;  // distinct task seeds cycled during training/eval

    // keydoor
    int grid_size = 6;

    // pagenav
    int num_items = 3;
    int num_pages = 6;
};

// throws std::invalid_argument naming the offending field
void validate_env_config(const EnvConfig& cfg);

struct StepResult {
    StateKey state_key;
    double reward = 0.0;
    bool done = false;
    bool valid = true;
};

// Base environment. Reward assignment, horizon bookkeeping, and nonce
// injection live here so both built-in environments share exact semantics:
// success pays success_reward and terminates, invalid actions pay
// invalid_penalty and leave the underlying state untouched (which is what
// makes states recur), valid non-terminal moves pay 0.
class Environment {
public:
    explicit Environment(const EnvConfig& cfg) : cfg_(cfg) {}
    virtual ~Environment() = default;

    virtual int action_count() const = 0;

    StateKey reset(std::uint64_t task_seed);
    StepResult step(int action);

    bool done() const { return done_; }
    bool succeeded() const { return success_; }
    int steps_taken() const { return steps_taken_; }
    const StateKey& current_key() const { return key_; }
    const EnvConfig& config() const { return cfg_; }

    // Per-trajectory nonce stream; when cfg.nonce_injection is set, every
    // emitted key (including after invalid actions) carries a fresh
    // (base, counter) suffix, so no key ever repeats within a rollout.
    void set_nonce_base(std::uint64_t base) { nonce_base_ = base; }

protected:
    enum class Outcome { invalid, neutral, success };

    virtual void do_reset(std::uint64_t task_seed) = 0;
    // Mutates internal state only when the action is valid.
    virtual Outcome do_step(int action) = 0;
    virtual void encode_observation(KeyEncoder& enc) const = 0;

    const EnvConfig cfg_;

private:
    StateKey make_key();

    StateKey key_;
    bool done_ = false;
    bool success_ = false;
    int steps_taken_ = 0;
    std::uint64_t nonce_base_ = 0;
    std::uint32_t nonce_counter_ = 0;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg);

// Grid world: reach the key cell, then the door cell. Walls and cell
// placement are generated from the task seed; moves into walls or off the
// grid are invalid. Sparse terminal reward only.
class KeyDoorGridEnv final : public Environment {
public:
    explicit KeyDoorGridEnv(const EnvConfig& cfg);

    int action_count() const override { return 4; }  // up, down, left, right

    // exposed for tests
    int agent_x() const { return x_; }
    int agent_y() const { return y_; }
    bool has_key() const { return has_key_; }
    bool is_wall(int x, int y) const { return walls_[static_cast<std::size_t>(y * n_ + x)]; }
    int key_x() const { return key_x_; }
    int key_y() const { return key_y_; }
    int door_x() const { return door_x_; }
    int door_y() const { return door_y_; }

protected:
    void do_reset(std::uint64_t task_seed) override;
    Outcome do_step(int action) override;
    void encode_observation(KeyEncoder& enc) const override;

private:
    bool generate_layout(std::uint64_t task_seed);

    int n_;
    std::vector<char> walls_;
    std::uint64_t layout_digest_ = 0;
    int start_x_ = 0, start_y_ = 0;
    int key_x_ = 0, key_y_ = 0;
    int door_x_ = 0, door_y_ = 0;
    int x_ = 0, y_ = 0;
    bool has_key_ = false;
};

// Small directed page graph modelled on a shopping site: a root search
// page listing items (exactly one correct), item detail and cart pages for
// the correct item, and a chain of further result pages. Clicking a wrong
// item bounces back to the search page in one step, so the search page is
// a naturally recurring state with several distinct actions available.
class PageNavEnv final : public Environment {
public:
    explicit PageNavEnv(const EnvConfig& cfg);

    // actions: [0, num_items) click item, then next-page, back, buy
    int action_count() const override { return cfg_.num_items + 3; }

    int action_click(int item) const { return item; }
    int action_next() const { return cfg_.num_items; }
    int action_back() const { return cfg_.num_items + 1; }
    int action_buy() const { return cfg_.num_items + 2; }

    int correct_item() const { return correct_item_; }

    enum class Location : std::uint8_t { search = 0, detail = 1, cart = 2, page = 3 };
    Location location() const { return loc_; }

protected:
    void do_reset(std::uint64_t task_seed) override;
    Outcome do_step(int action) override;
    void encode_observation(KeyEncoder& enc) const override;

private:
    std::uint64_t task_digest_ = 0;
    int correct_item_ = 0;
    Location loc_ = Location::search;
    int page_ = 0;  // 1-based when loc_ == page
};

}  // namespace gigpo
