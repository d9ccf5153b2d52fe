#pragma once

#include <string>

#include "gigpo/trainer.hpp"

namespace gigpo {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    TrainConfig config;
    PolicyParams params;
    OptimizerState opt_state;
    int iteration = 0;  // iterations completed when saved
    bool final = false;
};

// JSON with parameter/moment vectors hex-encoded from their IEEE-754 bits,
// so a save/load/save cycle is byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gigpo
