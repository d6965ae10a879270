// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch Adam over a PairSet with a step-halving learning-rate schedule.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nacn2n/chain.hpp"
#include "nacn2n/dataset.hpp"
#include "nacn2n/image.hpp"

namespace nacn2n {

enum class LossKind { l2, l1 };
LossKind parse_loss_kind(const std::string& s);
std::string to_string(LossKind k);

struct TrainConfig {
    LossKind loss = LossKind::l2;
    double base_lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-8;
    int batch_size = 4;
    int epochs = 60;
    int lr_half_period = 20;
    std::uint64_t seed = 2024;
    /// 0 disables periodic checkpoints.
    int checkpoint_every = 0;
    bool fresh_noise_per_epoch = false;
};

void validate(const TrainConfig& cfg);

/// base_lr * 0.5^floor(epoch / lr_half_period).
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Mean squared (l2) or absolute (l1) difference.
double loss(const ImageGrid& pred, const ImageGrid& target, LossKind kind);
/// Batch loss over tensors; writes dL/dpred into `grad` when non-null.
template <typename S>
double loss(const Tensor<S>& pred, const Tensor<S>& target, LossKind kind, Tensor<S>* grad);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
    std::optional<double> val_psnr;
    std::optional<double> val_ssim;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    static TrainHistory from_json(const nlohmann::json& j);
};

/// Everything needed to continue training after a given number of epochs.
struct TrainState {
    std::vector<float> adam_m;
    std::vector<float> adam_v;
    std::uint64_t step = 0;
    /// Number of completed epochs (also the next epoch index).
    int epoch = 0;
    TrainHistory history;
};

struct ValidationSet {
    std::vector<ImageGrid> inputs;
    std::vector<ImageGrid> references;
};

struct TrainOptions {
    /// Continue from this state instead of starting fresh.
    std::optional<TrainState> resume;
    /// Periodic checkpoints go to <checkpoint_dir>/epoch_<n>; empty disables them.
    std::filesystem::path checkpoint_dir;
    /// CSV log (epoch,loss,lr,time), appended per epoch.
    std::filesystem::path log_csv;
    std::optional<ValidationSet> validation;
    /// Stop after this many completed epochs (simulates an interrupted run).
    std::optional<int> stop_after;
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains `chain` in place and returns the final optimizer state and history.
TrainState train(ChainModel<float>& chain, const PairSet& pairs, const TrainConfig& cfg,
                 const TrainOptions& opt = {});

}  // namespace nacn2n
