// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/chain.hpp"

#include "nacn2n/errors.hpp"

namespace nacn2n {

template <typename S>
ChainModel<S>::ChainModel(std::shared_ptr<const Backbone<S>> backbone, int modules,
                          std::uint64_t init_seed)
    : backbone_(std::move(backbone)), modules_(modules), init_seed_(init_seed) {
    if (!backbone_) throw ConfigError("chain needs a backbone", "model.backbone");
    if (modules_ < 1) throw ConfigError("module count T must be >= 1", "model.T");
    theta_ = backbone_->initial_parameters(init_seed_);
}

template <typename S>
void ChainModel<S>::set_theta(std::vector<S> theta) {
    if (theta.size() != theta_.size()) {
        throw ShapeError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, model expects " + std::to_string(theta_.size()));
    }
    theta_ = std::move(theta);
}

template <typename S>
Tensor<S> ChainModel<S>::forward(const Tensor<S>& x, std::vector<Tensor<S>>* intermediates) const {
    if (intermediates) intermediates->clear();
    Tensor<S> h = x;
    for (int t = 0; t < modules_; ++t) {
        h = backbone_->forward(theta_, h, nullptr);
        if (intermediates) intermediates->push_back(h);
    }
    return h;
}

template <typename S>
Tensor<S> ChainModel<S>::forward_train(const Tensor<S>& x, std::vector<Tape<S>>& tapes) const {
    tapes.assign(modules_, Tape<S>{});
    Tensor<S> h = x;
    for (int t = 0; t < modules_; ++t) h = backbone_->forward(theta_, h, &tapes[t]);
    return h;
}

template <typename S>
void ChainModel<S>::backward(std::vector<Tape<S>>& tapes, Tensor<S> gy, std::span<S> grad) const {
    if (tapes.size() != static_cast<std::size_t>(modules_)) throw Error("tape count mismatch");
    if (grad.size() != theta_.size()) throw ShapeError("gradient size mismatch");
    for (int t = modules_ - 1; t >= 0; --t) {
        gy = backbone_->backward(theta_, tapes[t], std::move(gy), grad, t > 0);
        tapes[t].clear();
    }
}

template <typename S>
ChainModel<S> compose_chain(std::shared_ptr<const Backbone<S>> backbone, int modules,
                            std::uint64_t init_seed) {
    return ChainModel<S>(std::move(backbone), modules, init_seed);
}

template <typename S>
Tensor<S> to_tensor(const std::vector<const ImageGrid*>& batch) {
    if (batch.empty()) throw ShapeError("empty batch");
    const int h = batch[0]->height();
    const int w = batch[0]->width();
    Tensor<S> t(1, static_cast<int>(batch.size()), h, w);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i]->height() != h || batch[i]->width() != w) {
            throw ShapeError("batch images differ in shape");
        }
        auto px = batch[i]->pixels();
        S* dst = t.image(0, static_cast<int>(i));
        for (std::size_t k = 0; k < px.size(); ++k) dst[k] = static_cast<S>(px[k]);
    }
    return t;
}

template <typename S>
Tensor<S> to_tensor(const ImageGrid& img) {
    return to_tensor<S>(std::vector<const ImageGrid*>{&img});
}

template <typename S>
ImageGrid to_image(const Tensor<S>& t, int ni, const std::string& id) {
    if (t.c != 1) throw ShapeError("expected a 1-channel tensor, got " + t.shape_string());
    std::vector<float> px(t.plane());
    const S* src = t.image(0, ni);
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = static_cast<float>(src[k]);
    return ImageGrid(t.h, t.w, std::move(px), kUnitRange, id);
}

ChainOutput forward(const ChainModel<float>& chain, const ImageGrid& img,
                    bool capture_intermediates) {
    chain.backbone().check_input(img.height(), img.width());
    std::vector<Tensor<float>> inter;
    Tensor<float> y = chain.forward(to_tensor<float>(img), capture_intermediates ? &inter : nullptr);
    ChainOutput out{to_image(y, 0, img.id()), {}};
    out.final.set_group(img.group());
    for (const auto& t : inter) out.intermediates.push_back(to_image(t, 0, img.id()));
    return out;
}

#define NACN2N_INSTANTIATE(S)                                                                   \
    template class ChainModel<S>;                                                               \
    template ChainModel<S> compose_chain<S>(std::shared_ptr<const Backbone<S>>, int,            \
                                            std::uint64_t);                                     \
    template Tensor<S> to_tensor<S>(const std::vector<const ImageGrid*>&);                      \
    template Tensor<S> to_tensor<S>(const ImageGrid&);                                          \
    template ImageGrid to_image<S>(const Tensor<S>&, int, const std::string&);

NACN2N_INSTANTIATE(float)
NACN2N_INSTANTIATE(double)
#undef NACN2N_INSTANTIATE

}  // namespace nacn2n
