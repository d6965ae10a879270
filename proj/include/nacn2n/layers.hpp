// SPDX-License-Identifier: Apache-2.0
//
// Layer primitives with hand-written backward passes.
//
// Parameters are never owned by a layer: every layer is a set of offsets into
// one flat parameter vector, which is what lets a chain of modules share a
// single theta.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nacn2n/tensor.hpp"

namespace nacn2n {

enum class InitKind { he_normal, zeros };

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
    InitKind init = InitKind::zeros;
    int fan_in = 1;
};

class ParamLayout {
public:
    /// Appends a tensor and returns its offset.
    std::size_t add(std::string name, std::vector<int> shape, InitKind init, int fan_in);

    const std::vector<ParamTensor>& tensors() const noexcept { return tensors_; }
    std::size_t total() const noexcept { return total_; }

    /// Deterministic initial values: He-normal weights (std sqrt(2/fan_in)),
    /// zero biases. Each tensor draws from its own stream keyed by its name,
    /// and values are generated in double so float and double models agree.
    std::vector<double> initial_values(std::uint64_t seed) const;

private:
    std::vector<ParamTensor> tensors_;
    std::size_t total_ = 0;
};

/// k x k stride-1 convolution. Weight layout [cout][cin][k][k].
struct Conv2d {
    int cin = 0;
    int cout = 0;
    int k = 3;
    int pad = 1;
    std::size_t weight = 0;
    std::size_t bias = 0;

    static Conv2d make(ParamLayout& layout, const std::string& name, int cin, int cout, int k,
                       int pad, InitKind init = InitKind::he_normal);
    int out_size(int in) const noexcept { return in + 2 * pad - k + 1; }
};

/// k x k stride-1 transposed convolution. Weight layout [cin][cout][k][k].
struct ConvTranspose2d {
    int cin = 0;
    int cout = 0;
    int k = 3;
    int pad = 0;
    std::size_t weight = 0;
    std::size_t bias = 0;

    static ConvTranspose2d make(ParamLayout& layout, const std::string& name, int cin, int cout,
                                int k, int pad);
    int out_size(int in) const noexcept { return in + k - 1 - 2 * pad; }
};

/// 2 x 2 stride-2 transposed convolution (U-Net up-sampling). Weight [cin][cout][2][2].
struct UpConv2x2 {
    int cin = 0;
    int cout = 0;
    std::size_t weight = 0;
    std::size_t bias = 0;

    static UpConv2x2 make(ParamLayout& layout, const std::string& name, int cin, int cout);
};

template <typename S>
Tensor<S> forward(const Conv2d& op, std::span<const S> theta, const Tensor<S>& x);
/// Accumulates parameter gradients into `grad`; returns dL/dx when `need_gx`.
template <typename S>
Tensor<S> backward(const Conv2d& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx);

template <typename S>
Tensor<S> forward(const ConvTranspose2d& op, std::span<const S> theta, const Tensor<S>& x);
template <typename S>
Tensor<S> backward(const ConvTranspose2d& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx);

template <typename S>
Tensor<S> forward(const UpConv2x2& op, std::span<const S> theta, const Tensor<S>& x);
template <typename S>
Tensor<S> backward(const UpConv2x2& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx);

template <typename S>
void relu_inplace(Tensor<S>& t) noexcept;
/// g *= (y > 0), where y is the post-activation output.
template <typename S>
void relu_backward_inplace(Tensor<S>& g, const Tensor<S>& y) noexcept;

/// 2 x 2 max pooling; `argmax` receives the winning offset (0..3) per output.
template <typename S>
Tensor<S> maxpool2x2(const Tensor<S>& x, std::vector<std::uint8_t>& argmax);
template <typename S>
Tensor<S> maxpool2x2_backward(const Tensor<S>& gy, const std::vector<std::uint8_t>& argmax);

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b);
/// Splits a gradient of concat_channels(a, b) into its first `ca` channels and the rest.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>& g, int ca);

template <typename S>
void add_inplace(Tensor<S>& a, const Tensor<S>& b);

}  // namespace nacn2n
