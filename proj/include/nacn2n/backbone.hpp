// SPDX-License-Identifier: Apache-2.0
//
// Single-module denoisers: 1-channel image in, same-shape 1-channel image out.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nacn2n/layers.hpp"
#include "nacn2n/tensor.hpp"

namespace nacn2n {

struct BackboneConfig {
    std::string name = "unet";
    int base_channels = 64;
    /// unet: pooling levels; cpce: conv/deconv pairs; resnet: residual blocks.
    int depth = 4;
    int kernel_size = 3;
    /// unet only: add the input to the output and zero-initialise the final
    /// 1x1 conv, so an untrained module (and any chain of them) is the identity.
    bool residual = true;

    bool operator==(const BackboneConfig&) const = default;

    /// Canonical defaults for a registry name (unet 64/4, cpce 32/4, resnet 64/8).
    static BackboneConfig defaults_for(const std::string& name);
};

/// Registry lookup: implemented names, reserved names and everything else.
enum class RegistryStatus { implemented, reserved, unknown };
RegistryStatus registry_status(const std::string& name);
std::vector<std::string> implemented_backbones();
std::vector<std::string> reserved_backbones();

/// Throws ConfigError / RegistryError / NotImplementedError as appropriate.
void validate(const BackboneConfig& cfg);

template <typename S>
class Backbone {
public:
    explicit Backbone(BackboneConfig cfg) : cfg_(std::move(cfg)) {}
    virtual ~Backbone() = default;

    const BackboneConfig& config() const noexcept { return cfg_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::size_t parameter_count() const noexcept { return layout_.total(); }

    /// Throws ShapeError naming the requirement when h x w is unsupported.
    virtual void check_input(int h, int w) const = 0;

    std::vector<S> initial_parameters(std::uint64_t seed) const;

    /// `tape` may be null for inference.
    virtual Tensor<S> forward(std::span<const S> theta, const Tensor<S>& x,
                              Tape<S>* tape) const = 0;

    /// Consumes `tape`, accumulates into `grad`, returns dL/dx (empty unless requested).
    virtual Tensor<S> backward(std::span<const S> theta, Tape<S>& tape, Tensor<S> gy,
                               std::span<S> grad, bool need_input_grad) const = 0;

protected:
    BackboneConfig cfg_;
    ParamLayout layout_;
};

template <typename S>
std::shared_ptr<const Backbone<S>> build_backbone(const BackboneConfig& cfg);

}  // namespace nacn2n
