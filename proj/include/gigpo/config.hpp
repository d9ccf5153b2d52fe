#pragma once

#include <string>

#include "gigpo/trainer.hpp"

#include "json.hpp"

namespace gigpo {

// Config files are a single flat JSON object. Required fields: algorithm,
// env_name, group_size, num_groups, iterations, seed. Everything else has a
// default; unknown keys are rejected. Errors name the offending field.
TrainConfig parse_train_config(const nlohmann::json& j);
TrainConfig load_train_config(const std::string& path);

// Fully resolved flat config with every field explicit; keys are sorted, so
// the dump doubles as the canonical form for hashing.
nlohmann::json dump_train_config(const TrainConfig& cfg);

// fnv1a64 of the canonical dump, as 16 lowercase hex digits
std::string config_hash(const TrainConfig& cfg);

}  // namespace gigpo
