// SPDX-License-Identifier: Apache-2.0
//
// T applications of one backbone sharing a single parameter vector.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nacn2n/backbone.hpp"
#include "nacn2n/image.hpp"

namespace nacn2n {

template <typename S>
class ChainModel {
public:
    ChainModel(std::shared_ptr<const Backbone<S>> backbone, int modules, std::uint64_t init_seed);

    const Backbone<S>& backbone() const noexcept { return *backbone_; }
    std::shared_ptr<const Backbone<S>> backbone_ptr() const noexcept { return backbone_; }
    const BackboneConfig& config() const noexcept { return backbone_->config(); }
    int modules() const noexcept { return modules_; }
    std::uint64_t init_seed() const noexcept { return init_seed_; }

    /// Scalars in theta; the same for every module count.
    std::size_t parameter_count() const noexcept { return theta_.size(); }
    std::span<const S> theta() const noexcept { return theta_; }
    std::span<S> theta() noexcept { return theta_; }
    void set_theta(std::vector<S> theta);

    /// f^T(x). When `intermediates` is non-null it receives all T outputs.
    Tensor<S> forward(const Tensor<S>& x, std::vector<Tensor<S>>* intermediates = nullptr) const;

    /// Forward pass that records one tape per application.
    Tensor<S> forward_train(const Tensor<S>& x, std::vector<Tape<S>>& tapes) const;
    /// Back-propagates dL/dy through all applications in reverse, accumulating
    /// into the single gradient vector `grad` (size parameter_count()).
    void backward(std::vector<Tape<S>>& tapes, Tensor<S> gy, std::span<S> grad) const;

private:
    std::shared_ptr<const Backbone<S>> backbone_;
    int modules_ = 1;
    std::uint64_t init_seed_ = 0;
    std::vector<S> theta_;
};

/// Throws ConfigError for modules < 1.
template <typename S>
ChainModel<S> compose_chain(std::shared_ptr<const Backbone<S>> backbone, int modules,
                            std::uint64_t init_seed);

template <typename S>
Tensor<S> to_tensor(const std::vector<const ImageGrid*>& batch);
template <typename S>
Tensor<S> to_tensor(const ImageGrid& img);
/// Image `ni` of a 1-channel tensor.
template <typename S>
ImageGrid to_image(const Tensor<S>& t, int ni, const std::string& id = {});

struct ChainOutput {
    ImageGrid final;
    std::vector<ImageGrid> intermediates;
};

ChainOutput forward(const ChainModel<float>& chain, const ImageGrid& img,
                    bool capture_intermediates = false);

}  // namespace nacn2n
