// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nacn2n/errors.hpp"

namespace nacn2n {

/// Dense activation tensor in channel-major C x N x H x W order.
///
/// Keeping channels outermost makes every convolution a single GEMM over the
/// whole batch and turns channel concatenation into buffer concatenation.
template <typename S>
struct Tensor {
    int c = 0;
    int n = 0;
    int h = 0;
    int w = 0;
    std::vector<S> data;

    Tensor() = default;
    Tensor(int channels, int batch, int height, int width)
        : c(channels), n(batch), h(height), w(width),
          data(static_cast<std::size_t>(channels) * batch * height * width, S(0)) {}

    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
    /// Columns of the (C x N*H*W) matrix view.
    std::size_t cols() const noexcept { return static_cast<std::size_t>(n) * plane(); }
    std::size_t numel() const noexcept { return data.size(); }

    S* channel(int ci) noexcept { return data.data() + ci * cols(); }
    const S* channel(int ci) const noexcept { return data.data() + ci * cols(); }
    S* image(int ci, int ni) noexcept { return channel(ci) + ni * plane(); }
    const S* image(int ci, int ni) const noexcept { return channel(ci) + ni * plane(); }

    bool same_shape(const Tensor& o) const noexcept {
        return c == o.c && n == o.n && h == o.h && w == o.w;
    }
    std::string shape_string() const {
        return "[" + std::to_string(c) + "," + std::to_string(n) + "," + std::to_string(h) + "," +
               std::to_string(w) + "]";
    }
};

/// Saved activations of one module application, consumed in reverse by backward.
template <typename S>
class Tape {
public:
    void push(Tensor<S> t) { tensors_.push_back(std::move(t)); }
    void push_mask(std::vector<std::uint8_t> m) { masks_.push_back(std::move(m)); }

    Tensor<S> pop() {
        if (tensors_.empty()) throw Error("tape underflow");
        Tensor<S> t = std::move(tensors_.back());
        tensors_.pop_back();
        return t;
    }
    const Tensor<S>& top() const {
        if (tensors_.empty()) throw Error("tape underflow");
        return tensors_.back();
    }
    std::vector<std::uint8_t> pop_mask() {
        if (masks_.empty()) throw Error("tape underflow");
        auto m = std::move(masks_.back());
        masks_.pop_back();
        return m;
    }
    bool empty() const noexcept { return tensors_.empty() && masks_.empty(); }
    void clear() noexcept {
        tensors_.clear();
        masks_.clear();
    }

private:
    std::vector<Tensor<S>> tensors_;
    std::vector<std::vector<std::uint8_t>> masks_;
};

}  // namespace nacn2n
