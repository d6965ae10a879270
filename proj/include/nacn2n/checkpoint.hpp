// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint directory: manifest.json plus params.bin, adam_m.bin, adam_v.bin.
// Each blob is "NACK", a version byte, a little-endian u64 count and that
// many little-endian float32 values.
#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "nacn2n/chain.hpp"
#include "nacn2n/trainer.hpp"

namespace nacn2n {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    BackboneConfig backbone;
    int modules = 1;
    std::uint64_t init_seed = 0;
    std::vector<float> theta;
    TrainState state;
    nlohmann::json train_config = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& dir, const ChainModel<float>& chain,
                     const TrainState& state,
                     const nlohmann::json& train_config = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Rebuilds the chain described by a checkpoint with its stored parameters.
ChainModel<float> restore_chain(const Checkpoint& ckpt);

void write_blob(const std::filesystem::path& path, const std::vector<float>& values);
std::vector<float> read_blob(const std::filesystem::path& path);

}  // namespace nacn2n
