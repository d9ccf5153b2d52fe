#include "gigpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gigpo {

// ---------------------------------------------------------------------------
// featurizer

StateFeaturizer::StateFeaturizer(int feature_dim, std::uint64_t seed) : dim_(feature_dim) {
    table_.resize(static_cast<std::size_t>(kPositionSlots) * 256 * static_cast<std::size_t>(dim_));
    std::size_t idx = 0;
    for (int pos = 0; pos < kPositionSlots; ++pos) {
        for (int byte = 0; byte < 256; ++byte) {
            std::uint64_t h = mix_seed(stream::kFeature, seed, static_cast<std::uint64_t>(pos),
                                       static_cast<std::uint64_t>(byte));
            std::uint64_t bits = 0;
            int remaining = 0;
            for (int j = 0; j < dim_; ++j) {
                if (remaining == 0) {
                    h = splitmix64(h);
                    bits = h;
                    remaining = 64;
                }
                table_[idx++] = (bits & 1) ? 1.0 : -1.0;
                bits >>= 1;
                --remaining;
            }
        }
    }
}

void StateFeaturizer::featurize(const StateKey& key, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(dim_), 0.0);
    if (key.bytes.empty()) return;
    for (std::size_t i = 0; i < key.bytes.size(); ++i) {
        int pos = static_cast<int>(i % kPositionSlots);
        unsigned char b = static_cast<unsigned char>(key.bytes[i]);
        const double* row = &table_[(static_cast<std::size_t>(pos) * 256 + b) * static_cast<std::size_t>(dim_)];
        for (int j = 0; j < dim_; ++j) out[static_cast<std::size_t>(j)] += row[j];
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(key.bytes.size()));
    for (double& x : out) x *= scale;
}

// ---------------------------------------------------------------------------
// params

PolicyParams PolicyParams::make(const PolicyConfig& cfg) {
    if (cfg.action_count < 2) throw std::invalid_argument("policy: action space size must be >= 2");

    PolicyParams p;
    p.cfg_ = cfg;
    if (cfg.kind == PolicyConfig::Kind::mlp) {
        if (cfg.feature_dim < 1) throw std::invalid_argument("policy_feature_dim: must be >= 1");
        if (cfg.hidden_dim < 1) throw std::invalid_argument("policy_hidden_dim: must be >= 1");
        p.featurizer_ = std::make_shared<StateFeaturizer>(cfg.feature_dim, cfg.init_seed);

        const int d = cfg.feature_dim, h = cfg.hidden_dim, a = cfg.action_count;
        p.flat_.assign(static_cast<std::size_t>(h) * d + h + static_cast<std::size_t>(a) * h + a, 0.0);
        RngStream rng(mix_seed(stream::kPolicyInit, cfg.init_seed));
        const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
        for (int i = 0; i < h * d; ++i) p.flat_[static_cast<std::size_t>(p.w1_off() + i)] = s1 * rng.gaussian();
        // small output weights: the initial policy starts close to uniform
        const double s2 = 0.1 / std::sqrt(static_cast<double>(h));
        for (int i = 0; i < a * h; ++i) p.flat_[static_cast<std::size_t>(p.w2_off() + i)] = s2 * rng.gaussian();
    }
    return p;
}

int PolicyParams::state_row(const StateKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
}

int PolicyParams::materialize_row(const StateKey& key) {
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int row = static_cast<int>(keys_.size());
    index_.emplace(key, row);
    keys_.push_back(key);
    flat_.resize(flat_.size() + static_cast<std::size_t>(cfg_.action_count), 0.0);
    return row;
}

// ---------------------------------------------------------------------------
// forward passes

namespace {

void softmax_inplace(std::vector<double>& logits) {
    double mx = logits[0];
    for (double z : logits)
        if (z > mx) mx = z;
    if (!std::isfinite(mx)) throw std::runtime_error("policy: non-finite logits");
    double sum = 0.0;
    for (double& z : logits) {
        z = std::exp(z - mx);
        sum += z;
    }
    for (double& z : logits) z /= sum;
}

struct MlpForward {
    std::vector<double> x;      // features
    std::vector<double> h;      // tanh activations
    std::vector<double> probs;  // softmax(z)
};

MlpForward mlp_forward(const PolicyParams& p, const StateKey& key) {
    const auto& cfg = p.config();
    const int d = cfg.feature_dim, hd = cfg.hidden_dim, a = cfg.action_count;
    const auto& w = p.flat();

    MlpForward f;
    p.featurizer().featurize(key, f.x);
    f.h.resize(static_cast<std::size_t>(hd));
    for (int i = 0; i < hd; ++i) {
        double acc = w[static_cast<std::size_t>(p.b1_off() + i)];
        const double* row = &w[static_cast<std::size_t>(p.w1_off() + i * d)];
        for (int j = 0; j < d; ++j) acc += row[j] * f.x[static_cast<std::size_t>(j)];
        f.h[static_cast<std::size_t>(i)] = std::tanh(acc);
    }
    f.probs.resize(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        double acc = w[static_cast<std::size_t>(p.b2_off() + k)];
        const double* row = &w[static_cast<std::size_t>(p.w2_off() + k * hd)];
        for (int i = 0; i < hd; ++i) acc += row[i] * f.h[static_cast<std::size_t>(i)];
        f.probs[static_cast<std::size_t>(k)] = acc;
    }
    softmax_inplace(f.probs);
    return f;
}

std::vector<double> tabular_probs(const PolicyParams& p, const StateKey& key) {
    const int a = p.config().action_count;
    std::vector<double> probs(static_cast<std::size_t>(a), 0.0);
    int row = p.state_row(key);
    if (row >= 0) {
        const auto& w = p.flat();
        for (int k = 0; k < a; ++k) probs[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(row * a + k)];
    }
    softmax_inplace(probs);  // zero row -> uniform
    return probs;
}

// Backpropagates a logit-space gradient gz into the flat gradient vector.
void mlp_backward(const PolicyParams& p, const MlpForward& f, const std::vector<double>& gz,
                  std::vector<double>& grad) {
    const auto& cfg = p.config();
    const int d = cfg.feature_dim, hd = cfg.hidden_dim, a = cfg.action_count;
    const auto& w = p.flat();

    std::vector<double> dh(static_cast<std::size_t>(hd), 0.0);
    for (int k = 0; k < a; ++k) {
        const double g = gz[static_cast<std::size_t>(k)];
        if (g == 0.0) continue;
        double* gw2 = &grad[static_cast<std::size_t>(p.w2_off() + k * hd)];
        const double* w2 = &w[static_cast<std::size_t>(p.w2_off() + k * hd)];
        for (int i = 0; i < hd; ++i) {
            gw2[i] += g * f.h[static_cast<std::size_t>(i)];
            dh[static_cast<std::size_t>(i)] += g * w2[i];
        }
        grad[static_cast<std::size_t>(p.b2_off() + k)] += g;
    }
    for (int i = 0; i < hd; ++i) {
        const double hi = f.h[static_cast<std::size_t>(i)];
        const double gpre = dh[static_cast<std::size_t>(i)] * (1.0 - hi * hi);
        if (gpre == 0.0) continue;
        double* gw1 = &grad[static_cast<std::size_t>(p.w1_off() + i * d)];
        for (int j = 0; j < d; ++j) gw1[j] += gpre * f.x[static_cast<std::size_t>(j)];
        grad[static_cast<std::size_t>(p.b1_off() + i)] += gpre;
    }
}

}  // namespace

std::vector<double> action_distribution(const PolicyParams& params, const StateKey& key) {
    if (params.config().kind == PolicyConfig::Kind::tabular) return tabular_probs(params, key);
    return mlp_forward(params, key).probs;
}

std::pair<int, double> sample_action(const PolicyParams& params, const StateKey& key, RngStream& rng) {
    auto probs = action_distribution(params, key);
    int a = rng.categorical(probs);
    return {a, std::log(probs[static_cast<std::size_t>(a)])};
}

double logprob(const PolicyParams& params, const StateKey& key, int action) {
    auto probs = action_distribution(params, key);
    return std::log(probs[static_cast<std::size_t>(action)]);
}

double kl_to_reference(const PolicyParams& params, const PolicySnapshot& ref, const StateKey& key) {
    auto p = action_distribution(params, key);
    auto q = action_distribution(ref, key);
    double kl = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] <= 0.0) continue;
        if (q[a] <= 0.0) throw std::runtime_error("kl_to_reference: reference assigns zero probability");
        kl += p[a] * (std::log(p[a]) - std::log(q[a]));
    }
    return kl < 0.0 ? 0.0 : kl;  // clamp tiny negative rounding
}

void accumulate_logprob_grad(const PolicyParams& params, const StateKey& key, int action,
                             double scale, std::vector<double>& grad) {
    const int a = params.config().action_count;
    if (action < 0 || action >= a) throw std::invalid_argument("accumulate_logprob_grad: action out of range");

    if (params.config().kind == PolicyConfig::Kind::tabular) {
        int row = params.state_row(key);
        if (row < 0) throw std::logic_error("accumulate_logprob_grad: state not materialized");
        auto probs = tabular_probs(params, key);
        for (int k = 0; k < a; ++k) {
            double ind = (k == action) ? 1.0 : 0.0;
            grad[static_cast<std::size_t>(row * a + k)] += scale * (ind - probs[static_cast<std::size_t>(k)]);
        }
        return;
    }

    auto f = mlp_forward(params, key);
    std::vector<double> gz(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        double ind = (k == action) ? 1.0 : 0.0;
        gz[static_cast<std::size_t>(k)] = scale * (ind - f.probs[static_cast<std::size_t>(k)]);
    }
    mlp_backward(params, f, gz, grad);
}

void accumulate_kl_grad(const PolicyParams& params, const PolicySnapshot& ref, const StateKey& key,
                        double scale, std::vector<double>& grad) {
    const int a = params.config().action_count;
    auto p = action_distribution(params, key);
    auto q = action_distribution(ref, key);

    double kl = 0.0;
    std::vector<double> diff(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        std::size_t i = static_cast<std::size_t>(k);
        if (q[i] <= 0.0) throw std::runtime_error("accumulate_kl_grad: reference assigns zero probability");
        diff[i] = std::log(p[i]) - std::log(q[i]);
        kl += p[i] * diff[i];
    }
    // d KL / d logit_k = p_k * (log(p_k/q_k) - KL)
    if (params.config().kind == PolicyConfig::Kind::tabular) {
        int row = params.state_row(key);
        if (row < 0) throw std::logic_error("accumulate_kl_grad: state not materialized");
        for (int k = 0; k < a; ++k) {
            std::size_t i = static_cast<std::size_t>(k);
            grad[static_cast<std::size_t>(row * a + k)] += scale * p[i] * (diff[i] - kl);
        }
        return;
    }

    auto f = mlp_forward(params, key);
    std::vector<double> gz(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        std::size_t i = static_cast<std::size_t>(k);
        gz[i] = scale * p[i] * (diff[i] - kl);
    }
    mlp_backward(params, f, gz, grad);
}

std::pair<double, std::vector<double>> logprob_and_grad(const PolicyParams& params,
                                                        const StateKey& key, int action) {
    std::vector<double> grad(params.flat().size(), 0.0);
    accumulate_logprob_grad(params, key, action, 1.0, grad);
    return {logprob(params, key, action), std::move(grad)};
}

SurrogateTerms accumulate_surrogate_grad(const PolicyParams& params, const PolicySnapshot& ref,
                                         const StateKey& key, int action, double logprob_old,
                                         double advantage, double clip_lo, double clip_hi,
                                         double kl_beta, double scale, std::vector<double>& grad) {
    const auto& cfg = params.config();
    const int a = cfg.action_count;
    const std::size_t ai = static_cast<std::size_t>(action);

    MlpForward f;
    std::vector<double> p;
    if (cfg.kind == PolicyConfig::Kind::tabular) {
        p = tabular_probs(params, key);
    } else {
        f = mlp_forward(params, key);
        p = f.probs;
    }
    auto q = action_distribution(ref, key);

    const double lp = std::log(p[ai]);
    const double rho = std::exp(lp - logprob_old);
    const double unclipped = rho * advantage;
    const double rho_c = std::min(std::max(rho, clip_lo), clip_hi);
    const double clipped = rho_c * advantage;

    SurrogateTerms terms;
    terms.clip_term = std::min(unclipped, clipped);
    // gradient flows only when the unclipped branch is active
    const double coef = (unclipped <= clipped) ? rho * advantage : 0.0;

    std::vector<double> diff(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        std::size_t i = static_cast<std::size_t>(k);
        if (q[i] <= 0.0) throw std::runtime_error("surrogate: reference assigns zero probability");
        diff[i] = std::log(p[i]) - std::log(q[i]);
        terms.kl += p[i] * diff[i];
    }

    std::vector<double> gz(static_cast<std::size_t>(a));
    for (int k = 0; k < a; ++k) {
        std::size_t i = static_cast<std::size_t>(k);
        const double ind = (k == action) ? 1.0 : 0.0;
        const double g_clip = coef * (ind - p[i]);
        const double g_kl = kl_beta * p[i] * (diff[i] - terms.kl);
        gz[i] = scale * (g_clip - g_kl);
    }

    if (cfg.kind == PolicyConfig::Kind::tabular) {
        int row = params.state_row(key);
        if (row < 0) throw std::logic_error("surrogate: state not materialized");
        for (int k = 0; k < a; ++k)
            grad[static_cast<std::size_t>(row * a + k)] += gz[static_cast<std::size_t>(k)];
    } else {
        mlp_backward(params, f, gz, grad);
    }
    return terms;
}

void apply_update(PolicyParams& params, const std::vector<double>& grad, const OptimizerConfig& opt,
                  OptimizerState& state) {
    auto& w = params.flat();
    if (grad.size() != w.size()) throw std::invalid_argument("apply_update: gradient size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw std::runtime_error("apply_update: non-finite gradient, update rejected");

    if (opt.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += opt.lr * grad[i];
        ++state.step_count;
        return;
    }

    if (state.m.size() < w.size()) state.m.resize(w.size(), 0.0);
    if (state.v.size() < w.size()) state.v.resize(w.size(), 0.0);
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(opt.beta1, t);
    const double c2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < w.size(); ++i) {
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grad[i];
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        w[i] += opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
}

}  // namespace gigpo
