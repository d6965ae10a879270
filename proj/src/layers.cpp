// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "nacn2n/noise.hpp"

namespace nacn2n {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;
template <typename S>
using VecMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;

// Unfolds a C x N x H x W image into rows (c, ky, kx) and columns (n, oy, ox)
// of the output grid Ho x Wo, with implicit zero padding `pad`.
template <typename S>
void im2col(const S* x, int C, int N, int H, int W, int k, int pad, int Ho, int Wo, S* col) {
    const std::size_t P = static_cast<std::size_t>(N) * Ho * Wo;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                S* dst = col + static_cast<std::size_t>((c * k + ky) * k + kx) * P;
                const int ox_lo = std::clamp(pad - kx, 0, Wo);
                const int ox_hi = std::clamp(W + pad - kx, ox_lo, Wo);
                for (int n = 0; n < N; ++n) {
                    const S* src = x + (static_cast<std::size_t>(c) * N + n) * H * W;
                    for (int oy = 0; oy < Ho; ++oy) {
                        S* d = dst + (static_cast<std::size_t>(n) * Ho + oy) * Wo;
                        const int iy = oy + ky - pad;
                        if (iy < 0 || iy >= H) {
                            std::fill(d, d + Wo, S(0));
                            continue;
                        }
                        std::fill(d, d + ox_lo, S(0));
                        const S* s = src + static_cast<std::size_t>(iy) * W + (ox_lo + kx - pad);
                        std::copy(s, s + (ox_hi - ox_lo), d + ox_lo);
                        std::fill(d + ox_hi, d + Wo, S(0));
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatters columns back onto a zero-initialised image.
template <typename S>
void col2im(const S* col, int C, int N, int H, int W, int k, int pad, int Ho, int Wo, S* x) {
    const std::size_t P = static_cast<std::size_t>(N) * Ho * Wo;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const S* src = col + static_cast<std::size_t>((c * k + ky) * k + kx) * P;
                const int ox_lo = std::clamp(pad - kx, 0, Wo);
                const int ox_hi = std::clamp(W + pad - kx, ox_lo, Wo);
                for (int n = 0; n < N; ++n) {
                    S* dst = x + (static_cast<std::size_t>(c) * N + n) * H * W;
                    for (int oy = 0; oy < Ho; ++oy) {
                        const int iy = oy + ky - pad;
                        if (iy < 0 || iy >= H) continue;
                        const S* s = src + (static_cast<std::size_t>(n) * Ho + oy) * Wo;
                        S* d = dst + static_cast<std::size_t>(iy) * W + (ox_lo + kx - pad);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) d[ox - ox_lo] += s[ox];
                    }
                }
            }
        }
    }
}

template <typename S>
void add_bias(Tensor<S>& y, const S* bias) {
    const std::size_t P = y.cols();
    for (int co = 0; co < y.c; ++co) {
        S* row = y.channel(co);
        const S b = bias[co];
        for (std::size_t i = 0; i < P; ++i) row[i] += b;
    }
}

template <typename S>
void accumulate_bias_grad(const Tensor<S>& gy, S* gb) {
    const std::size_t P = gy.cols();
    for (int co = 0; co < gy.c; ++co) {
        const S* row = gy.channel(co);
        S acc = 0;
        for (std::size_t i = 0; i < P; ++i) acc += row[i];
        gb[co] += acc;
    }
}

void check_channels(int got, int want, const char* what) {
    if (got != want) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(want) +
                         " input channels, got " + std::to_string(got));
    }
}

}  // namespace

std::size_t ParamLayout::add(std::string name, std::vector<int> shape, InitKind init, int fan_in) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    ParamTensor t{std::move(name), std::move(shape), total_, size, init, fan_in};
    total_ += size;
    tensors_.push_back(std::move(t));
    return tensors_.back().offset;
}

std::vector<double> ParamLayout::initial_values(std::uint64_t seed) const {
    std::vector<double> out(total_, 0.0);
    for (const auto& t : tensors_) {
        if (t.init != InitKind::he_normal) continue;
        std::mt19937_64 rng(derive_seed(seed, {fnv1a64(t.name)}));
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(1, t.fan_in)));
        for (std::size_t i = 0; i < t.size; ++i) out[t.offset + i] = dist(rng);
    }
    return out;
}

Conv2d Conv2d::make(ParamLayout& layout, const std::string& name, int cin, int cout, int k,
                    int pad, InitKind init) {
    Conv2d op{cin, cout, k, pad, 0, 0};
    op.weight = layout.add(name + ".weight", {cout, cin, k, k}, init, cin * k * k);
    op.bias = layout.add(name + ".bias", {cout}, InitKind::zeros, 1);
    return op;
}

ConvTranspose2d ConvTranspose2d::make(ParamLayout& layout, const std::string& name, int cin,
                                      int cout, int k, int pad) {
    ConvTranspose2d op{cin, cout, k, pad, 0, 0};
    // Each output pixel receives cin * k * k contributions away from the border.
    op.weight = layout.add(name + ".weight", {cin, cout, k, k}, InitKind::he_normal, cin * k * k);
    op.bias = layout.add(name + ".bias", {cout}, InitKind::zeros, 1);
    return op;
}

UpConv2x2 UpConv2x2::make(ParamLayout& layout, const std::string& name, int cin, int cout) {
    UpConv2x2 op{cin, cout, 0, 0};
    op.weight = layout.add(name + ".weight", {cin, cout, 2, 2}, InitKind::he_normal, cin);
    op.bias = layout.add(name + ".bias", {cout}, InitKind::zeros, 1);
    return op;
}

template <typename S>
Tensor<S> forward(const Conv2d& op, std::span<const S> theta, const Tensor<S>& x) {
    check_channels(x.c, op.cin, "conv2d");
    const int Ho = op.out_size(x.h);
    const int Wo = op.out_size(x.w);
    if (Ho < 1 || Wo < 1) throw ShapeError("conv2d output would be empty for " + x.shape_string());
    Tensor<S> y(op.cout, x.n, Ho, Wo);
    const int K = op.cin * op.k * op.k;
    const auto P = static_cast<Eigen::Index>(y.cols());
    ConstMatMap<S> Wm(theta.data() + op.weight, op.cout, K);
    MatMap<S> Y(y.data.data(), op.cout, P);
    if (op.k == 1 && op.pad == 0) {
        Y.noalias() = Wm * ConstMatMap<S>(x.data.data(), K, P);
    } else {
        std::vector<S> col(static_cast<std::size_t>(K) * P);
        im2col(x.data.data(), x.c, x.n, x.h, x.w, op.k, op.pad, Ho, Wo, col.data());
        Y.noalias() = Wm * ConstMatMap<S>(col.data(), K, P);
    }
    add_bias(y, theta.data() + op.bias);
    return y;
}

template <typename S>
Tensor<S> backward(const Conv2d& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx) {
    const int K = op.cin * op.k * op.k;
    const auto P = static_cast<Eigen::Index>(gy.cols());
    ConstMatMap<S> G(gy.data.data(), op.cout, P);
    MatMap<S> gW(grad.data() + op.weight, op.cout, K);
    accumulate_bias_grad(gy, grad.data() + op.bias);

    const bool pointwise = op.k == 1 && op.pad == 0;
    std::vector<S> col;
    const S* colp = x.data.data();
    if (!pointwise) {
        col.resize(static_cast<std::size_t>(K) * P);
        im2col(x.data.data(), x.c, x.n, x.h, x.w, op.k, op.pad, gy.h, gy.w, col.data());
        colp = col.data();
    }
    gW.noalias() += G * ConstMatMap<S>(colp, K, P).transpose();
    if (!need_gx) return {};

    ConstMatMap<S> Wm(theta.data() + op.weight, op.cout, K);
    Tensor<S> gx(x.c, x.n, x.h, x.w);
    if (pointwise) {
        MatMap<S>(gx.data.data(), K, P).noalias() = Wm.transpose() * G;
        return gx;
    }
    // Reuse the column buffer for the input gradient.
    MatMap<S> gcol(col.data(), K, P);
    gcol.noalias() = Wm.transpose() * G;
    col2im(col.data(), x.c, x.n, x.h, x.w, op.k, op.pad, gy.h, gy.w, gx.data.data());
    return gx;
}

template <typename S>
Tensor<S> forward(const ConvTranspose2d& op, std::span<const S> theta, const Tensor<S>& x) {
    check_channels(x.c, op.cin, "conv_transpose2d");
    const int Ho = op.out_size(x.h);
    const int Wo = op.out_size(x.w);
    if (Ho < 1 || Wo < 1) {
        throw ShapeError("conv_transpose2d output would be empty for " + x.shape_string());
    }
    const int K = op.cout * op.k * op.k;
    const auto P = static_cast<Eigen::Index>(x.cols());
    ConstMatMap<S> Wm(theta.data() + op.weight, op.cin, K);
    std::vector<S> col(static_cast<std::size_t>(K) * P);
    MatMap<S>(col.data(), K, P).noalias() =
        Wm.transpose() * ConstMatMap<S>(x.data.data(), op.cin, P);
    Tensor<S> y(op.cout, x.n, Ho, Wo);
    col2im(col.data(), op.cout, x.n, Ho, Wo, op.k, op.pad, x.h, x.w, y.data.data());
    add_bias(y, theta.data() + op.bias);
    return y;
}

template <typename S>
Tensor<S> backward(const ConvTranspose2d& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx) {
    const int K = op.cout * op.k * op.k;
    const auto P = static_cast<Eigen::Index>(x.cols());
    std::vector<S> col(static_cast<std::size_t>(K) * P);
    im2col(gy.data.data(), gy.c, gy.n, gy.h, gy.w, op.k, op.pad, x.h, x.w, col.data());
    ConstMatMap<S> Gc(col.data(), K, P);
    ConstMatMap<S> X(x.data.data(), op.cin, P);
    MatMap<S>(grad.data() + op.weight, op.cin, K).noalias() += X * Gc.transpose();
    accumulate_bias_grad(gy, grad.data() + op.bias);
    if (!need_gx) return {};
    Tensor<S> gx(x.c, x.n, x.h, x.w);
    MatMap<S>(gx.data.data(), op.cin, P).noalias() =
        ConstMatMap<S>(theta.data() + op.weight, op.cin, K) * Gc;
    return gx;
}

template <typename S>
Tensor<S> forward(const UpConv2x2& op, std::span<const S> theta, const Tensor<S>& x) {
    check_channels(x.c, op.cin, "upconv2x2");
    const int K = op.cout * 4;
    const auto P = static_cast<Eigen::Index>(x.cols());
    RowMat<S> cols = ConstMatMap<S>(theta.data() + op.weight, op.cin, K).transpose() *
                     ConstMatMap<S>(x.data.data(), op.cin, P);
    Tensor<S> y(op.cout, x.n, 2 * x.h, 2 * x.w);
    const S* bias = theta.data() + op.bias;
    for (int co = 0; co < op.cout; ++co) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const S* src = cols.data() + static_cast<std::size_t>(co * 4 + a * 2 + b) * P;
                for (int n = 0; n < x.n; ++n) {
                    S* dst = y.image(co, n);
                    for (int i = 0; i < x.h; ++i) {
                        const S* s = src + (static_cast<std::size_t>(n) * x.h + i) * x.w;
                        S* d = dst + static_cast<std::size_t>(2 * i + a) * y.w + b;
                        for (int j = 0; j < x.w; ++j) d[2 * j] = s[j] + bias[co];
                    }
                }
            }
        }
    }
    return y;
}

template <typename S>
Tensor<S> backward(const UpConv2x2& op, std::span<const S> theta, const Tensor<S>& x,
                   const Tensor<S>& gy, std::span<S> grad, bool need_gx) {
    const int K = op.cout * 4;
    const auto P = static_cast<Eigen::Index>(x.cols());
    RowMat<S> gcols(K, P);
    for (int co = 0; co < op.cout; ++co) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                S* dst = gcols.data() + static_cast<std::size_t>(co * 4 + a * 2 + b) * P;
                for (int n = 0; n < x.n; ++n) {
                    const S* src = gy.image(co, n);
                    for (int i = 0; i < x.h; ++i) {
                        S* d = dst + (static_cast<std::size_t>(n) * x.h + i) * x.w;
                        const S* s = src + static_cast<std::size_t>(2 * i + a) * gy.w + b;
                        for (int j = 0; j < x.w; ++j) d[j] = s[2 * j];
                    }
                }
            }
        }
    }
    ConstMatMap<S> X(x.data.data(), op.cin, P);
    MatMap<S>(grad.data() + op.weight, op.cin, K).noalias() += X * gcols.transpose();
    accumulate_bias_grad(gy, grad.data() + op.bias);
    if (!need_gx) return {};
    Tensor<S> gx(x.c, x.n, x.h, x.w);
    MatMap<S>(gx.data.data(), op.cin, P).noalias() =
        ConstMatMap<S>(theta.data() + op.weight, op.cin, K) * gcols;
    return gx;
}

template <typename S>
void relu_inplace(Tensor<S>& t) noexcept {
    for (auto& v : t.data) v = v > S(0) ? v : S(0);
}

template <typename S>
void relu_backward_inplace(Tensor<S>& g, const Tensor<S>& y) noexcept {
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (!(y.data[i] > S(0))) g.data[i] = S(0);
    }
}

template <typename S>
Tensor<S> maxpool2x2(const Tensor<S>& x, std::vector<std::uint8_t>& argmax) {
    if (x.h % 2 != 0 || x.w % 2 != 0) {
        throw ShapeError("maxpool2x2 needs even spatial dims, got " + x.shape_string());
    }
    Tensor<S> y(x.c, x.n, x.h / 2, x.w / 2);
    argmax.assign(y.numel(), 0);
    std::size_t o = 0;
    for (int c = 0; c < x.c; ++c) {
        for (int n = 0; n < x.n; ++n) {
            const S* src = x.image(c, n);
            for (int i = 0; i < y.h; ++i) {
                const S* r0 = src + static_cast<std::size_t>(2 * i) * x.w;
                const S* r1 = r0 + x.w;
                for (int j = 0; j < y.w; ++j, ++o) {
                    S best = r0[2 * j];
                    std::uint8_t arg = 0;
                    if (r0[2 * j + 1] > best) best = r0[2 * j + 1], arg = 1;
                    if (r1[2 * j] > best) best = r1[2 * j], arg = 2;
                    if (r1[2 * j + 1] > best) best = r1[2 * j + 1], arg = 3;
                    y.data[o] = best;
                    argmax[o] = arg;
                }
            }
        }
    }
    return y;
}

template <typename S>
Tensor<S> maxpool2x2_backward(const Tensor<S>& gy, const std::vector<std::uint8_t>& argmax) {
    Tensor<S> gx(gy.c, gy.n, gy.h * 2, gy.w * 2);
    std::size_t o = 0;
    for (int c = 0; c < gy.c; ++c) {
        for (int n = 0; n < gy.n; ++n) {
            S* dst = gx.image(c, n);
            for (int i = 0; i < gy.h; ++i) {
                for (int j = 0; j < gy.w; ++j, ++o) {
                    const int a = argmax[o] >> 1;
                    const int b = argmax[o] & 1;
                    dst[static_cast<std::size_t>(2 * i + a) * gx.w + 2 * j + b] = gy.data[o];
                }
            }
        }
    }
    return gx;
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ShapeError("concat of mismatched tensors " + a.shape_string() + " and " +
                         b.shape_string());
    }
    Tensor<S> out;
    out.c = a.c + b.c;
    out.n = a.n;
    out.h = a.h;
    out.w = a.w;
    out.data.reserve(a.data.size() + b.data.size());
    out.data.insert(out.data.end(), a.data.begin(), a.data.end());
    out.data.insert(out.data.end(), b.data.begin(), b.data.end());
    return out;
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>& g, int ca) {
    Tensor<S> a(ca, g.n, g.h, g.w);
    Tensor<S> b(g.c - ca, g.n, g.h, g.w);
    const auto mid = g.data.begin() + static_cast<std::ptrdiff_t>(a.data.size());
    std::copy(g.data.begin(), mid, a.data.begin());
    std::copy(mid, g.data.end(), b.data.begin());
    return {std::move(a), std::move(b)};
}

template <typename S>
void add_inplace(Tensor<S>& a, const Tensor<S>& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add of mismatched tensors " + a.shape_string() + " and " +
                         b.shape_string());
    }
    VecMap<S>(a.data.data(), static_cast<Eigen::Index>(a.data.size())) +=
        Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(
            b.data.data(), static_cast<Eigen::Index>(b.data.size()));
}

#define NACN2N_INSTANTIATE_LAYERS(S)                                                            \
    template Tensor<S> forward(const Conv2d&, std::span<const S>, const Tensor<S>&);             \
    template Tensor<S> backward(const Conv2d&, std::span<const S>, const Tensor<S>&,             \
                                const Tensor<S>&, std::span<S>, bool);                           \
    template Tensor<S> forward(const ConvTranspose2d&, std::span<const S>, const Tensor<S>&);    \
    template Tensor<S> backward(const ConvTranspose2d&, std::span<const S>, const Tensor<S>&,    \
                                const Tensor<S>&, std::span<S>, bool);                           \
    template Tensor<S> forward(const UpConv2x2&, std::span<const S>, const Tensor<S>&);          \
    template Tensor<S> backward(const UpConv2x2&, std::span<const S>, const Tensor<S>&,          \
                                const Tensor<S>&, std::span<S>, bool);                           \
    template void relu_inplace(Tensor<S>&) noexcept;                                             \
    template void relu_backward_inplace(Tensor<S>&, const Tensor<S>&) noexcept;                  \
    template Tensor<S> maxpool2x2(const Tensor<S>&, std::vector<std::uint8_t>&);                 \
    template Tensor<S> maxpool2x2_backward(const Tensor<S>&, const std::vector<std::uint8_t>&);  \
    template Tensor<S> concat_channels(const Tensor<S>&, const Tensor<S>&);                      \
    template std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>&, int);              \
    template void add_inplace(Tensor<S>&, const Tensor<S>&);

NACN2N_INSTANTIATE_LAYERS(float)
NACN2N_INSTANTIATE_LAYERS(double)

#undef NACN2N_INSTANTIATE_LAYERS

}  // namespace nacn2n
