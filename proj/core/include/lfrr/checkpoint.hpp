#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lfrr/blocks.hpp"

namespace lfrr {

// Checkpoint container: "LFCK" magic, version byte, the training config as
// opaque text, then one shape-prefixed 64-bit block per parameter path.
// Round-trips bit-exactly.

void write_checkpoint(const std::string& path, const ModelParams& p,
                      const std::string& config_text);

struct CheckpointData {
    std::string config_text;
    std::vector<std::pair<std::string, Tensor>> entries;
};

CheckpointData read_checkpoint(const std::string& path);

// Rebuilds structured parameters from raw entries. Throws ConfigMismatch when
// a path is missing or a stored shape disagrees with the config's layout.
ModelParams load_model_params(const ModelConfig& cfg, const CheckpointData& data);

}  // namespace lfrr
