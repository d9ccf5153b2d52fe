#include "gigpo/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace gigpo {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw std::invalid_argument("config: field '" + field + "' " + what);
}

const json& require(const json& j, const std::string& field) {
    auto it = j.find(field);
    if (it == j.end()) throw std::invalid_argument("config: missing required field '" + field + "'");
    return *it;
}

std::string get_string(const json& j, const std::string& field, const std::string& fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_string()) field_error(field, "must be a string");
    return it->get<std::string>();
}

std::string get_required_string(const json& j, const std::string& field) {
    const json& v = require(j, field);
    if (!v.is_string()) field_error(field, "must be a string");
    return v.get<std::string>();
}

double get_number(const json& j, const std::string& field, double fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_number()) field_error(field, "must be a number");
    return it->get<double>();
}

std::int64_t get_integer(const json& j, const std::string& field, std::int64_t fallback,
                         bool required = false) {
    auto it = j.find(field);
    if (it == j.end()) {
        if (required) throw std::invalid_argument("config: missing required field '" + field + "'");
        return fallback;
    }
    if (!it->is_number_integer()) field_error(field, "must be an integer");
    return it->get<std::int64_t>();
}

bool get_bool(const json& j, const std::string& field, bool fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) field_error(field, "must be a boolean");
    return it->get<bool>();
}

const std::set<std::string>& known_fields() {
    static const std::set<std::string> fields = {
        "algorithm",      "norm_mode",          "norm_epsilon",      "omega",
        "gamma",          "group_size",         "num_groups",        "clip_eps",
        "clip_eps_high",  "kl_beta",            "dynamic_sampling",  "resample_budget",
        "iterations",     "minibatch_size",     "seed",              "checkpoint_every",
        "grouping",       "similarity_threshold",
        "env_name",       "env_horizon",        "env_success_reward", "env_invalid_penalty",
        "env_nonce",      "env_task_pool",      "env_grid_size",     "env_num_items",
        "env_num_pages",
        "policy_kind",    "policy_feature_dim", "policy_hidden_dim",
        "optimizer_kind", "lr",                 "adam_beta1",        "adam_beta2",
        "adam_eps",
    };
    return fields;
}

}  // namespace

TrainConfig parse_train_config(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (known_fields().count(it.key()) == 0)
            throw std::invalid_argument("config: unknown field '" + it.key() + "'");

    TrainConfig cfg;
    cfg.algorithm = get_required_string(j, "algorithm");

    const std::string norm_mode = get_string(j, "norm_mode", "std");
    if (norm_mode == "std")
        cfg.norm.mode = NormalizationFactor::Mode::std_dev;
    else if (norm_mode == "one")
        cfg.norm.mode = NormalizationFactor::Mode::one;
    else
        field_error("norm_mode", "must be 'std' or 'one'");
    cfg.norm.epsilon = get_number(j, "norm_epsilon", 1e-8);

    cfg.omega = get_number(j, "omega", 1.0);
    cfg.gamma = get_number(j, "gamma", 0.95);
    cfg.group_size = static_cast<int>(get_integer(j, "group_size", 0, true));
    cfg.num_groups = static_cast<int>(get_integer(j, "num_groups", 0, true));
    cfg.clip_eps = get_number(j, "clip_eps", 0.2);
    {
        auto it = j.find("clip_eps_high");
        if (it != j.end() && !it->is_null()) {
            if (!it->is_number()) field_error("clip_eps_high", "must be a number or null");
            cfg.clip_eps_high = it->get<double>();
        }
    }
    cfg.kl_beta = get_number(j, "kl_beta", 0.01);
    cfg.dynamic_sampling = get_bool(j, "dynamic_sampling", false);
    cfg.resample_budget = static_cast<int>(get_integer(j, "resample_budget", 3));
    cfg.iterations = static_cast<int>(get_integer(j, "iterations", 0, true));
    cfg.minibatch_size = static_cast<int>(get_integer(j, "minibatch_size", 256));
    cfg.seed = static_cast<std::uint64_t>(get_integer(j, "seed", 0, true));
    cfg.checkpoint_every = static_cast<int>(get_integer(j, "checkpoint_every", 0));

    const std::string grouping = get_string(j, "grouping", "exact");
    if (grouping == "exact")
        cfg.grouping.mode = GroupingMode::exact;
    else if (grouping == "similarity")
        cfg.grouping.mode = GroupingMode::similarity;
    else
        field_error("grouping", "must be 'exact' or 'similarity'");
    cfg.grouping.threshold = get_number(j, "similarity_threshold", 0.9);

    cfg.env.name = get_required_string(j, "env_name");
    cfg.env.horizon = static_cast<int>(get_integer(j, "env_horizon", 30));
    cfg.env.success_reward = get_number(j, "env_success_reward", 10.0);
    cfg.env.invalid_penalty = get_number(j, "env_invalid_penalty", -0.1);
    cfg.env.nonce_injection = get_bool(j, "env_nonce", false);
    cfg.env.task_pool = static_cast<int>(get_integer(j, "env_task_pool", 8));
    cfg.env.grid_size = static_cast<int>(get_integer(j, "env_grid_size", 6));
    cfg.env.num_items = static_cast<int>(get_integer(j, "env_num_items", 3));
    cfg.env.num_pages = static_cast<int>(get_integer(j, "env_num_pages", 6));

    const std::string kind = get_string(j, "policy_kind", "mlp");
    if (kind == "tabular")
        cfg.policy.kind = PolicyConfig::Kind::tabular;
    else if (kind == "mlp")
        cfg.policy.kind = PolicyConfig::Kind::mlp;
    else
        field_error("policy_kind", "must be 'tabular' or 'mlp'");
    cfg.policy.feature_dim = static_cast<int>(get_integer(j, "policy_feature_dim", 64));
    cfg.policy.hidden_dim = static_cast<int>(get_integer(j, "policy_hidden_dim", 128));

    const std::string opt = get_string(j, "optimizer_kind", "adam");
    if (opt == "sgd")
        cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
    else if (opt == "adam")
        cfg.optimizer.kind = OptimizerConfig::Kind::adam;
    else
        field_error("optimizer_kind", "must be 'sgd' or 'adam'");
    const double default_lr = cfg.policy.kind == PolicyConfig::Kind::tabular ? 0.05 : 0.003;
    cfg.optimizer.lr = get_number(j, "lr", default_lr);
    cfg.optimizer.beta1 = get_number(j, "adam_beta1", 0.9);
    cfg.optimizer.beta2 = get_number(j, "adam_beta2", 0.999);
    cfg.optimizer.eps = get_number(j, "adam_eps", 1e-8);

    validate_train_config(cfg);
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: JSON parse error in '" + path + "': " + e.what());
    }
    return parse_train_config(j);
}

json dump_train_config(const TrainConfig& cfg) {
    json j;
    j["algorithm"] = cfg.algorithm;
    j["norm_mode"] = cfg.norm.mode == NormalizationFactor::Mode::std_dev ? "std" : "one";
    j["norm_epsilon"] = cfg.norm.epsilon;
    j["omega"] = cfg.effective_omega();
    j["gamma"] = cfg.gamma;
    j["group_size"] = cfg.group_size;
    j["num_groups"] = cfg.num_groups;
    j["clip_eps"] = cfg.clip_eps;
    if (cfg.clip_eps_high >= 0.0)
        j["clip_eps_high"] = cfg.clip_eps_high;
    else
        j["clip_eps_high"] = nullptr;
    j["kl_beta"] = cfg.kl_beta;
    j["dynamic_sampling"] = cfg.dynamic_sampling;
    j["resample_budget"] = cfg.resample_budget;
    j["iterations"] = cfg.iterations;
    j["minibatch_size"] = cfg.minibatch_size;
    j["seed"] = cfg.seed;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["grouping"] = cfg.grouping.mode == GroupingMode::exact ? "exact" : "similarity";
    j["similarity_threshold"] = cfg.grouping.threshold;
    j["env_name"] = cfg.env.name;
    j["env_horizon"] = cfg.env.horizon;
    j["env_success_reward"] = cfg.env.success_reward;
    j["env_invalid_penalty"] = cfg.env.invalid_penalty;
    j["env_nonce"] = cfg.env.nonce_injection;
    j["env_task_pool"] = cfg.env.task_pool;
    j["env_grid_size"] = cfg.env.grid_size;
    j["env_num_items"] = cfg.env.num_items;
    j["env_num_pages"] = cfg.env.num_pages;
    j["policy_kind"] = cfg.policy.kind == PolicyConfig::Kind::tabular ? "tabular" : "mlp";
    j["policy_feature_dim"] = cfg.policy.feature_dim;
    j["policy_hidden_dim"] = cfg.policy.hidden_dim;
    j["optimizer_kind"] = cfg.optimizer.kind == OptimizerConfig::Kind::sgd ? "sgd" : "adam";
    j["lr"] = cfg.optimizer.lr;
    j["adam_beta1"] = cfg.optimizer.beta1;
    j["adam_beta2"] = cfg.optimizer.beta2;
    j["adam_eps"] = cfg.optimizer.eps;
    return j;
}

std::string config_hash(const TrainConfig& cfg) {
    const std::string canonical = dump_train_config(cfg).dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return std::string(buf);
}

}  // namespace gigpo
