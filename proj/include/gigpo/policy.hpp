#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gigpo/rng.hpp"
#include "gigpo/state_key.hpp"

namespace gigpo {

struct PolicyConfig {
    enum class Kind { tabular, mlp };
    Kind kind = Kind::tabular;
    int action_count = 4;
    int feature_dim = 64;  // mlp input width
    int hidden_dim = 128;  // mlp hidden width
    std::uint64_t init_seed = 0;
};

// Fixed random projection of key bytes onto feature_dim dimensions. The
// per-(position, byte) sign patterns are precomputed once from the seed, so
// featurization is an immutable table lookup: safe to share across threads
// and cheap enough for per-step use.
class StateFeaturizer {
public:
    StateFeaturizer(int feature_dim, std::uint64_t seed);

    void featurize(const StateKey& key, std::vector<double>& out) const;
    int dim() const { return dim_; }

    static constexpr int kPositionSlots = 64;  // byte positions wrap past this

private:
    int dim_;
    std::vector<double> table_;  // [position][byte][dim]
};

// Parameters of a small stochastic policy over a discrete action space.
// Tabular: one logit row per materialized state, unseen states read as a
// zero row (uniform) without mutating the table. MLP: one tanh hidden layer
// over featurized keys. All parameters live in one flat vector so the
// optimizer and finite-difference checks are representation-agnostic.
class PolicyParams {
public:
    static PolicyParams make(const PolicyConfig& cfg);

    const PolicyConfig& config() const { return cfg_; }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    // tabular rows
    int state_row(const StateKey& key) const;  // -1 when absent
    int materialize_row(const StateKey& key);  // appends a zero row when absent
    const std::vector<StateKey>& table_keys() const { return keys_; }

    const StateFeaturizer& featurizer() const { return *featurizer_; }

    // mlp flat layout offsets
    int w1_off() const { return 0; }
    int b1_off() const { return cfg_.hidden_dim * cfg_.feature_dim; }
    int w2_off() const { return b1_off() + cfg_.hidden_dim; }
    int b2_off() const { return w2_off() + cfg_.action_count * cfg_.hidden_dim; }

private:
    PolicyConfig cfg_;
    std::vector<double> flat_;
    std::unordered_map<StateKey, int, StateKeyHash> index_;
    std::vector<StateKey> keys_;
    std::shared_ptr<const StateFeaturizer> featurizer_;  // shared by snapshots
};

// Frozen copy of policy parameters (the rollout-time and reference policies).
using PolicySnapshot = PolicyParams;

// Probability vector from a numerically stable softmax over the state's
// logits; throws on non-finite logits.
std::vector<double> action_distribution(const PolicyParams& params, const StateKey& key);

std::pair<int, double> sample_action(const PolicyParams& params, const StateKey& key, RngStream& rng);

double logprob(const PolicyParams& params, const StateKey& key, int action);

// Exact categorical KL(pi_params(.|key) || pi_ref(.|key)).
double kl_to_reference(const PolicyParams& params, const PolicySnapshot& ref, const StateKey& key);

// grad += scale * d log pi(action|key) / d params. Tabular states must be
// materialized first.
void accumulate_logprob_grad(const PolicyParams& params, const StateKey& key, int action,
                             double scale, std::vector<double>& grad);

// grad += scale * d KL(pi_params || pi_ref) / d params (ref held fixed).
void accumulate_kl_grad(const PolicyParams& params, const PolicySnapshot& ref, const StateKey& key,
                        double scale, std::vector<double>& grad);

// (log pi(action|key), dense gradient aligned with params.flat())
std::pair<double, std::vector<double>> logprob_and_grad(const PolicyParams& params,
                                                        const StateKey& key, int action);

struct SurrogateTerms {
    double clip_term = 0.0;  // min(rho*A, clamp(rho,lo,hi)*A)
    double kl = 0.0;         // KL(pi_params || pi_ref) at this state
};

// Fused per-step objective term: adds
//   scale * d/dtheta [ min(rho*A, clamp(rho,lo,hi)*A) - kl_beta * KL ]
// to grad with a single forward/backward pass, where
// rho = exp(log pi(action|key) - logprob_old). Returns the unscaled terms.
SurrogateTerms accumulate_surrogate_grad(const PolicyParams& params, const PolicySnapshot& ref,
                                         const StateKey& key, int action, double logprob_old,
                                         double advantage, double clip_lo, double clip_hi,
                                         double kl_beta, double scale, std::vector<double>& grad);

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double lr = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step_count = 0;
};

// One ascent step. Rejects non-finite gradients without touching params or
// optimizer state. Moment vectors grow with the parameter vector.
void apply_update(PolicyParams& params, const std::vector<double>& grad, const OptimizerConfig& opt,
                  OptimizerState& state);

}  // namespace gigpo
