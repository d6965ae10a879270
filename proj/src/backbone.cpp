// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/backbone.hpp"

#include <algorithm>

#include "nacn2n/errors.hpp"

namespace nacn2n {

namespace {

const std::vector<std::string>& implemented_names() {
    static const std::vector<std::string> names{"unet", "cpce", "resnet"};
    return names;
}

const std::vector<std::string>& reserved_names() {
    static const std::vector<std::string> names{"r2unet", "attunet", "r2aunet"};
    return names;
}

// U-Net: per level two kxk conv+ReLU then 2x2 max-pool; a two-conv bottleneck;
// per level a 2x2 transposed conv, skip concatenation and two conv+ReLU; a
// final 1x1 conv to one channel with no activation. With `residual` the input
// is added back and the final conv starts at zero.
template <typename S>
class UNet final : public Backbone<S> {
    using Backbone<S>::cfg_;
    using Backbone<S>::layout_;

    struct Level {
        Conv2d c1, c2;
    };

public:
    explicit UNet(BackboneConfig cfg) : Backbone<S>(std::move(cfg)) {
        const int k = cfg_.kernel_size;
        const int pad = k / 2;
        const int d = cfg_.depth;
        int cin = 1;
        for (int l = 0; l < d; ++l) {
            const int c = cfg_.base_channels << l;
            const std::string p = "enc" + std::to_string(l);
            enc_.push_back({Conv2d::make(layout_, p + ".conv1", cin, c, k, pad),
                            Conv2d::make(layout_, p + ".conv2", c, c, k, pad)});
            cin = c;
        }
        const int cb = cfg_.base_channels << d;
        bottleneck_ = {Conv2d::make(layout_, "bottleneck.conv1", cin, cb, k, pad),
                       Conv2d::make(layout_, "bottleneck.conv2", cb, cb, k, pad)};
        int cup = cb;
        dec_.resize(d);
        up_.resize(d);
        for (int l = d - 1; l >= 0; --l) {
            const int c = cfg_.base_channels << l;
            const std::string p = "dec" + std::to_string(l);
            up_[l] = UpConv2x2::make(layout_, p + ".up", cup, c);
            dec_[l] = {Conv2d::make(layout_, p + ".conv1", 2 * c, c, k, pad),
                       Conv2d::make(layout_, p + ".conv2", c, c, k, pad)};
            cup = c;
        }
        head_ = Conv2d::make(layout_, "head", cfg_.base_channels, 1, 1, 0,
                             cfg_.residual ? InitKind::zeros : InitKind::he_normal);
    }

    void check_input(int h, int w) const override {
        const int f = 1 << cfg_.depth;
        if (h % f != 0 || w % f != 0) {
            throw ShapeError("unet depth " + std::to_string(cfg_.depth) +
                             " needs height and width divisible by " + std::to_string(f) +
                             ", got " + std::to_string(h) + "x" + std::to_string(w));
        }
    }

    Tensor<S> forward(std::span<const S> theta, const Tensor<S>& x, Tape<S>* tape) const override {
        check_input(x.h, x.w);
        auto save = [&](const Tensor<S>& t) {
            if (tape) tape->push(t);
        };
        std::vector<Tensor<S>> skips;
        Tensor<S> h = x;
        for (const auto& lv : enc_) {
            save(h);
            Tensor<S> a = nacn2n::forward(lv.c1, theta, h);
            relu_inplace(a);
            save(a);
            Tensor<S> s = nacn2n::forward(lv.c2, theta, a);
            relu_inplace(s);
            save(s);
            std::vector<std::uint8_t> idx;
            h = maxpool2x2(s, idx);
            if (tape) tape->push_mask(std::move(idx));
            skips.push_back(std::move(s));
        }
        save(h);
        Tensor<S> a = nacn2n::forward(bottleneck_.c1, theta, h);
        relu_inplace(a);
        save(a);
        h = nacn2n::forward(bottleneck_.c2, theta, a);
        relu_inplace(h);
        save(h);
        for (int l = cfg_.depth - 1; l >= 0; --l) {
            Tensor<S> u = nacn2n::forward(up_[l], theta, h);
            Tensor<S> cat = concat_channels(u, skips[l]);
            save(cat);
            Tensor<S> a1 = nacn2n::forward(dec_[l].c1, theta, cat);
            relu_inplace(a1);
            save(a1);
            h = nacn2n::forward(dec_[l].c2, theta, a1);
            relu_inplace(h);
            save(h);
        }
        Tensor<S> y = nacn2n::forward(head_, theta, h);
        if (cfg_.residual) add_inplace(y, x);
        return y;
    }

    Tensor<S> backward(std::span<const S> theta, Tape<S>& tape, Tensor<S> gy, std::span<S> grad,
                       bool need_input_grad) const override {
        Tensor<S> g = nacn2n::backward(head_, theta, tape.top(), gy, grad, true);
        std::vector<Tensor<S>> gskip(cfg_.depth);
        for (int l = 0; l < cfg_.depth; ++l) {
            Tensor<S> hout = tape.pop();
            relu_backward_inplace(g, hout);
            Tensor<S> a1 = tape.pop();
            g = nacn2n::backward(dec_[l].c2, theta, a1, g, grad, true);
            relu_backward_inplace(g, a1);
            Tensor<S> cat = tape.pop();
            g = nacn2n::backward(dec_[l].c1, theta, cat, g, grad, true);
            auto [gu, gs] = split_channels(g, up_[l].cout);
            gskip[l] = std::move(gs);
            // Input of the up-conv is the output saved just below on the tape.
            g = nacn2n::backward(up_[l], theta, tape.top(), gu, grad, true);
        }
        {
            Tensor<S> hb = tape.pop();
            relu_backward_inplace(g, hb);
            Tensor<S> a = tape.pop();
            g = nacn2n::backward(bottleneck_.c2, theta, a, g, grad, true);
            relu_backward_inplace(g, a);
            Tensor<S> hin = tape.pop();
            g = nacn2n::backward(bottleneck_.c1, theta, hin, g, grad, true);
        }
        for (int l = cfg_.depth - 1; l >= 0; --l) {
            const auto idx = tape.pop_mask();
            Tensor<S> gs = maxpool2x2_backward(g, idx);
            add_inplace(gs, gskip[l]);
            Tensor<S> s = tape.pop();
            relu_backward_inplace(gs, s);
            Tensor<S> a = tape.pop();
            g = nacn2n::backward(enc_[l].c2, theta, a, gs, grad, true);
            relu_backward_inplace(g, a);
            Tensor<S> hin = tape.pop();
            g = nacn2n::backward(enc_[l].c1, theta, hin, g, grad, l > 0 || need_input_grad);
        }
        if (need_input_grad && cfg_.residual) add_inplace(g, gy);
        return g;
    }

private:
    std::vector<Level> enc_;
    Level bottleneck_;
    std::vector<UpConv2x2> up_;
    std::vector<Level> dec_;
    Conv2d head_;
};

// CPCE: `depth` unpadded conv+ReLU layers, then `depth` unpadded transposed
// conv+ReLU layers. After each of the first depth-1 transposed convs, the
// output is concatenated with the same-sized encoder feature (conveying path)
// and reduced back to base_channels by a 1x1 conv+ReLU.
template <typename S>
class Cpce final : public Backbone<S> {
    using Backbone<S>::cfg_;
    using Backbone<S>::layout_;

public:
    explicit Cpce(BackboneConfig cfg) : Backbone<S>(std::move(cfg)) {
        const int k = cfg_.kernel_size;
        const int c = cfg_.base_channels;
        const int d = cfg_.depth;
        for (int i = 0; i < d; ++i) {
            conv_.push_back(
                Conv2d::make(layout_, "conv" + std::to_string(i), i == 0 ? 1 : c, c, k, 0));
        }
        for (int j = 0; j < d; ++j) {
            const bool last = j == d - 1;
            deconv_.push_back(ConvTranspose2d::make(layout_, "deconv" + std::to_string(j), c,
                                                    last ? 1 : c, k, 0));
            if (!last) {
                convey_.push_back(
                    Conv2d::make(layout_, "convey" + std::to_string(j), 2 * c, c, 1, 0));
            }
        }
    }

    void check_input(int h, int w) const override {
        const int shrink = cfg_.depth * (cfg_.kernel_size - 1);
        if (h <= shrink || w <= shrink) {
            throw ShapeError("cpce depth " + std::to_string(cfg_.depth) + " kernel " +
                             std::to_string(cfg_.kernel_size) + " needs height and width > " +
                             std::to_string(shrink) + ", got " + std::to_string(h) + "x" +
                             std::to_string(w));
        }
    }

    Tensor<S> forward(std::span<const S> theta, const Tensor<S>& x, Tape<S>* tape) const override {
        check_input(x.h, x.w);
        auto save = [&](const Tensor<S>& t) {
            if (tape) tape->push(t);
        };
        const int d = cfg_.depth;
        std::vector<Tensor<S>> feats;
        Tensor<S> h = x;
        for (int i = 0; i < d; ++i) {
            save(h);
            h = nacn2n::forward(conv_[i], theta, h);
            relu_inplace(h);
            feats.push_back(h);
        }
        for (int j = 0; j < d; ++j) {
            save(h);
            h = nacn2n::forward(deconv_[j], theta, h);
            relu_inplace(h);
            if (j == d - 1) break;
            Tensor<S> cat = concat_channels(h, feats[d - 2 - j]);
            save(h);
            save(cat);
            h = nacn2n::forward(convey_[j], theta, cat);
            relu_inplace(h);
        }
        save(h);
        return h;
    }

    Tensor<S> backward(std::span<const S> theta, Tape<S>& tape, Tensor<S> gy, std::span<S> grad,
                       bool need_input_grad) const override {
        const int d = cfg_.depth;
        const int c = cfg_.base_channels;
        Tensor<S> g = std::move(gy);
        std::vector<Tensor<S>> gfeat(d);
        Tensor<S> out = tape.pop();
        relu_backward_inplace(g, out);
        for (int j = d - 1; j >= 0; --j) {
            if (j < d - 1) {
                // g is w.r.t. the relu'd output of convey_[j].
                Tensor<S> cat = tape.pop();
                g = nacn2n::backward(convey_[j], theta, cat, g, grad, true);
                auto [gd, gf] = split_channels(g, c);
                gfeat[d - 2 - j] = std::move(gf);
                g = std::move(gd);
                Tensor<S> dout = tape.pop();
                relu_backward_inplace(g, dout);
            }
            Tensor<S> din = tape.pop();
            g = nacn2n::backward(deconv_[j], theta, din, g, grad, true);
            // din is post-ReLU (either a conveying output or the last encoder feature)
            relu_backward_inplace(g, din);
        }
        for (int i = d - 1; i >= 0; --i) {
            Tensor<S> hin = tape.pop();
            g = nacn2n::backward(conv_[i], theta, hin, g, grad, i > 0 || need_input_grad);
            if (i > 0) {
                add_inplace(g, gfeat[i - 1]);
                relu_backward_inplace(g, hin);
            }
        }
        return g;
    }

private:
    std::vector<Conv2d> conv_;
    std::vector<ConvTranspose2d> deconv_;
    std::vector<Conv2d> convey_;
};

// ResNet: head conv+ReLU, `depth` blocks of relu(h + conv(relu(conv(h)))), a
// zero-initialised tail conv to one channel, and a global input skip, so a
// freshly built module is the identity map.
template <typename S>
class ResNet final : public Backbone<S> {
    using Backbone<S>::cfg_;
    using Backbone<S>::layout_;

    struct Block {
        Conv2d c1, c2;
    };

public:
    explicit ResNet(BackboneConfig cfg) : Backbone<S>(std::move(cfg)) {
        const int k = cfg_.kernel_size;
        const int pad = k / 2;
        const int c = cfg_.base_channels;
        head_ = Conv2d::make(layout_, "head", 1, c, k, pad);
        for (int b = 0; b < cfg_.depth; ++b) {
            const std::string p = "block" + std::to_string(b);
            blocks_.push_back({Conv2d::make(layout_, p + ".conv1", c, c, k, pad),
                               Conv2d::make(layout_, p + ".conv2", c, c, k, pad)});
        }
        tail_ = Conv2d::make(layout_, "tail", c, 1, k, pad, InitKind::zeros);
    }

    void check_input(int, int) const override {}

    Tensor<S> forward(std::span<const S> theta, const Tensor<S>& x, Tape<S>* tape) const override {
        auto save = [&](const Tensor<S>& t) {
            if (tape) tape->push(t);
        };
        save(x);
        Tensor<S> h = nacn2n::forward(head_, theta, x);
        relu_inplace(h);
        save(h);
        for (const auto& blk : blocks_) {
            Tensor<S> a = nacn2n::forward(blk.c1, theta, h);
            relu_inplace(a);
            save(a);
            Tensor<S> r = nacn2n::forward(blk.c2, theta, a);
            add_inplace(h, r);
            relu_inplace(h);
            save(h);
        }
        Tensor<S> y = nacn2n::forward(tail_, theta, h);
        add_inplace(y, x);
        return y;
    }

    Tensor<S> backward(std::span<const S> theta, Tape<S>& tape, Tensor<S> gy, std::span<S> grad,
                       bool need_input_grad) const override {
        Tensor<S> g = nacn2n::backward(tail_, theta, tape.top(), gy, grad, true);
        for (int b = cfg_.depth - 1; b >= 0; --b) {
            Tensor<S> hout = tape.pop();
            relu_backward_inplace(g, hout);
            Tensor<S> a = tape.pop();
            Tensor<S> ga = nacn2n::backward(blocks_[b].c2, theta, a, g, grad, true);
            relu_backward_inplace(ga, a);
            Tensor<S> gh = nacn2n::backward(blocks_[b].c1, theta, tape.top(), ga, grad, true);
            add_inplace(g, gh);
        }
        Tensor<S> h0 = tape.pop();
        relu_backward_inplace(g, h0);
        Tensor<S> x = tape.pop();
        Tensor<S> gx = nacn2n::backward(head_, theta, x, g, grad, need_input_grad);
        if (!need_input_grad) return {};
        add_inplace(gx, gy);
        return gx;
    }

private:
    Conv2d head_;
    std::vector<Block> blocks_;
    Conv2d tail_;
};

}  // namespace

BackboneConfig BackboneConfig::defaults_for(const std::string& name) {
    if (name == "cpce") return {"cpce", 32, 4, 3};
    if (name == "resnet") return {"resnet", 64, 8, 3};
    return {name, 64, 4, 3};
}

RegistryStatus registry_status(const std::string& name) {
    const auto& impl = implemented_names();
    if (std::find(impl.begin(), impl.end(), name) != impl.end()) return RegistryStatus::implemented;
    const auto& res = reserved_names();
    if (std::find(res.begin(), res.end(), name) != res.end()) return RegistryStatus::reserved;
    return RegistryStatus::unknown;
}

std::vector<std::string> implemented_backbones() { return implemented_names(); }
std::vector<std::string> reserved_backbones() { return reserved_names(); }

void validate(const BackboneConfig& cfg) {
    switch (registry_status(cfg.name)) {
        case RegistryStatus::unknown:
            throw RegistryError("unknown backbone '" + cfg.name + "'");
        case RegistryStatus::reserved:
            throw NotImplementedError("backbone '" + cfg.name +
                                      "' is reserved but not implemented");
        case RegistryStatus::implemented: break;
    }
    if (cfg.depth < 1) throw ConfigError("model.depth must be >= 1", "model.depth");
    if (cfg.base_channels < 1) {
        throw ConfigError("model.base_channels must be >= 1", "model.base_channels");
    }
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0) {
        throw ConfigError("model.kernel_size must be a positive odd integer", "model.kernel_size");
    }
    if (cfg.name == "unet" && cfg.depth > 12) {
        throw ConfigError("model.depth too large for unet", "model.depth");
    }
}

template <typename S>
std::vector<S> Backbone<S>::initial_parameters(std::uint64_t seed) const {
    const auto init = layout_.initial_values(seed);
    return std::vector<S>(init.begin(), init.end());
}

template <typename S>
std::shared_ptr<const Backbone<S>> build_backbone(const BackboneConfig& cfg) {
    validate(cfg);
    if (cfg.name == "unet") return std::make_shared<UNet<S>>(cfg);
    if (cfg.name == "cpce") return std::make_shared<Cpce<S>>(cfg);
    return std::make_shared<ResNet<S>>(cfg);
}

template class Backbone<float>;
template class Backbone<double>;
template std::shared_ptr<const Backbone<float>> build_backbone<float>(const BackboneConfig&);
template std::shared_ptr<const Backbone<double>> build_backbone<double>(const BackboneConfig&);

}  // namespace nacn2n
