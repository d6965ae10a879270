// SPDX-License-Identifier: Apache-2.0
//
// Root configuration: defaults, JSON file, then --section.key=value flags.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nacn2n/backbone.hpp"
#include "nacn2n/dataset.hpp"
#include "nacn2n/noise.hpp"
#include "nacn2n/trainer.hpp"

namespace nacn2n {

nlohmann::json noise_spec_to_json(const NoiseSpec& spec);
/// `prefix` is used in error keys ("noise", "experiment.ldct", ...).
NoiseSpec noise_spec_from_json(const nlohmann::json& j, const std::string& prefix = "noise");

struct DataSection {
    std::string input_dir;
    /// Clean references aligned by id with input_dir (optional).
    std::string reference_dir;
    std::string manifest;
    int copies = 2;
    PairingMode mode = PairingMode::n2n_pair;
    double train_fraction = 0.8;
    /// 0 trains on whole images.
    int patch_size = 0;
    int patch_stride = 0;
    std::uint64_t seed = 2024;
};

struct ModelSection {
    BackboneConfig backbone;
    int modules = 5;
    std::uint64_t init_seed = 2024;
};

struct ExternalMethod {
    std::string name;
    std::string dir;
};

struct ExperimentSection {
    std::string name = "experiment";
    /// none, backbone, module_count, gaussian_variance, ablation
    std::string axis = "none";
    nlohmann::json values = nlohmann::json::array();
    /// desk or full
    std::string scale = "desk";
    std::string output_dir = "runs";
    /// Noise that turns clean phantoms into the simulated low-dose observations.
    NoiseSpec ldct{255.0, 15.0, 0.0, 77};
    int train_phantoms = 100;
    int test_phantoms = 16;
    int phantom_size = 64;
    std::uint64_t phantom_seed = 7;
    std::vector<ExternalMethod> externals;
};

struct RootConfig {
    NoiseSpec noise;
    DataSection data;
    ModelSection model;
    TrainConfig train;
    ExperimentSection experiment;
};

nlohmann::json to_json(const RootConfig& cfg);
/// Strict: unknown keys and wrong types raise ConfigError naming the key.
RootConfig root_config_from_json(const nlohmann::json& j);

/// Sets a dotted path ("train.epochs") from a flag string. The value is parsed
/// as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& dotted, const std::string& value);

struct ResolvedConfig {
    RootConfig config;
    nlohmann::json json;
    std::vector<std::string> notes;
};

/// defaults < file < overrides; NACN2N_SEED (when set) replaces every seed.
ResolvedConfig resolve_config(const std::optional<std::string>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              const char* env_seed = nullptr);

void validate(const RootConfig& cfg);

/// FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string hex_hash(std::uint64_t h);

}  // namespace nacn2n
