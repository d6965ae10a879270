// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "nacn2n/checkpoint.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/metrics.hpp"
#include "nacn2n/noise.hpp"

namespace nacn2n {

LossKind parse_loss_kind(const std::string& s) {
    if (s == "l2") return LossKind::l2;
    if (s == "l1") return LossKind::l1;
    throw ConfigError("unknown loss '" + s + "' (expected l2 or l1)", "train.loss");
}

std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "l1"; }

void validate(const TrainConfig& cfg) {
    if (!(cfg.base_lr > 0)) throw ConfigError("train.base_lr must be > 0", "train.base_lr");
    if (!(cfg.beta1 > 0 && cfg.beta1 < 1)) throw ConfigError("train.beta1 must be in (0,1)", "train.beta1");
    if (!(cfg.beta2 > 0 && cfg.beta2 < 1)) throw ConfigError("train.beta2 must be in (0,1)", "train.beta2");
    if (!(cfg.epsilon > 0)) throw ConfigError("train.epsilon must be > 0", "train.epsilon");
    if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1", "train.batch_size");
    if (cfg.epochs < 0) throw ConfigError("train.epochs must be >= 0", "train.epochs");
    if (cfg.lr_half_period < 1) {
        throw ConfigError("train.lr_half_period must be >= 1", "train.lr_half_period");
    }
    if (cfg.checkpoint_every < 0) {
        throw ConfigError("train.checkpoint_every must be >= 0", "train.checkpoint_every");
    }
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw RangeError("epoch must be >= 0");
    return cfg.base_lr * std::ldexp(1.0, -(epoch / cfg.lr_half_period));
}

double loss(const ImageGrid& pred, const ImageGrid& target, LossKind kind) {
    if (!pred.same_shape(target)) throw ShapeError("loss: prediction and target differ in shape");
    if (pred.empty()) throw ShapeError("loss: empty images");
    const auto a = pred.pixels();
    const auto b = target.pixels();
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += kind == LossKind::l2 ? d * d : std::abs(d);
    }
    return acc / static_cast<double>(a.size());
}

template <typename S>
double loss(const Tensor<S>& pred, const Tensor<S>& target, LossKind kind, Tensor<S>* grad) {
    if (!pred.same_shape(target)) {
        throw ShapeError("loss: " + pred.shape_string() + " vs " + target.shape_string());
    }
    const std::size_t n = pred.numel();
    if (grad) *grad = Tensor<S>(pred.c, pred.n, pred.h, pred.w);
    double acc = 0;
    const S inv = S(1) / static_cast<S>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const S d = pred.data[i] - target.data[i];
        if (kind == LossKind::l2) {
            acc += static_cast<double>(d) * d;
            if (grad) grad->data[i] = S(2) * d * inv;
        } else {
            acc += std::abs(static_cast<double>(d));
            if (grad) grad->data[i] = (d > 0 ? S(1) : (d < 0 ? S(-1) : S(0))) * inv;
        }
    }
    return acc / static_cast<double>(n);
}

template double loss<float>(const Tensor<float>&, const Tensor<float>&, LossKind, Tensor<float>*);
template double loss<double>(const Tensor<double>&, const Tensor<double>&, LossKind,
                             Tensor<double>*);

std::string TrainHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,loss,lr,time\n" << std::setprecision(10);
    for (const auto& e : epochs) os << e.epoch << ',' << e.loss << ',' << e.lr << ',' << e.seconds << '\n';
    return os.str();
}

nlohmann::json TrainHistory::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : epochs) {
        nlohmann::json j{{"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.lr}, {"seconds", e.seconds}};
        if (e.val_psnr) j["val_psnr"] = *e.val_psnr;
        if (e.val_ssim) j["val_ssim"] = *e.val_ssim;
        arr.push_back(j);
    }
    return arr;
}

TrainHistory TrainHistory::from_json(const nlohmann::json& j) {
    TrainHistory h;
    for (const auto& e : j) {
        EpochRecord r;
        r.epoch = e.at("epoch").get<int>();
        r.loss = e.at("loss").get<double>();
        r.lr = e.at("lr").get<double>();
        r.seconds = e.value("seconds", 0.0);
        if (e.contains("val_psnr")) r.val_psnr = e["val_psnr"].get<double>();
        if (e.contains("val_ssim")) r.val_ssim = e["val_ssim"].get<double>();
        h.epochs.push_back(r);
    }
    return h;
}

namespace {

nlohmann::json config_json(const TrainConfig& c) {
    return {{"loss", to_string(c.loss)},     {"base_lr", c.base_lr},
            {"beta1", c.beta1},              {"beta2", c.beta2},
            {"epsilon", c.epsilon},          {"batch_size", c.batch_size},
            {"epochs", c.epochs},            {"lr_half_period", c.lr_half_period},
            {"seed", c.seed},                {"checkpoint_every", c.checkpoint_every},
            {"fresh_noise_per_epoch", c.fresh_noise_per_epoch}};
}

void adam_step(std::span<float> theta, std::span<const float> g, TrainState& st, double lr,
               const TrainConfig& cfg) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    const float step_size = static_cast<float>(lr / bc1);
    const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
    const float eps = static_cast<float>(cfg.epsilon);
    float* m = st.adam_m.data();
    float* v = st.adam_v.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        theta[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
    }
}

}  // namespace

TrainState train(ChainModel<float>& chain, const PairSet& pairs, const TrainConfig& cfg,
                 const TrainOptions& opt) {
    validate(cfg);
    const std::size_t np = chain.parameter_count();
    TrainState st;
    if (opt.resume) {
        st = *opt.resume;
        if (st.adam_m.size() != np || st.adam_v.size() != np) {
            throw ShapeError("resume state does not match the model's parameter count");
        }
    } else {
        st.adam_m.assign(np, 0.0f);
        st.adam_v.assign(np, 0.0f);
    }
    if (st.epoch >= cfg.epochs) return st;
    if (pairs.empty()) throw TrainingError("cannot train on an empty pair set");

    // Fixed-noise pairs are identical every epoch, so build them once.
    std::vector<TrainingPair> cache;
    if (!cfg.fresh_noise_per_epoch) {
        cache.reserve(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) cache.push_back(pairs.materialize(i));
        chain.backbone().check_input(cache[0].input.height(), cache[0].input.width());
    }

    std::vector<float> grad(np);
    std::vector<std::size_t> order(pairs.size());
    std::vector<Tape<float>> tapes;
    const int last = opt.stop_after ? std::min(cfg.epochs, *opt.stop_after) : cfg.epochs;

    for (int epoch = st.epoch; epoch < last; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_schedule(epoch, cfg);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(derive_seed(cfg.seed, {fnv1a64("shuffle"), static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<TrainingPair> fresh;
        if (cfg.fresh_noise_per_epoch) {
            fresh.reserve(pairs.size());
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                fresh.push_back(pairs.materialize_fresh(i, static_cast<std::uint64_t>(epoch)));
            }
        }
        const auto& data = cfg.fresh_noise_per_epoch ? fresh : cache;

        double epoch_loss = 0;
        std::size_t batch_index = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size, ++batch_index) {
            const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
            std::vector<const ImageGrid*> xs, ts;
            for (std::size_t k = b0; k < b1; ++k) {
                xs.push_back(&data[order[k]].input);
                ts.push_back(&data[order[k]].target);
            }
            const Tensor<float> x = to_tensor<float>(xs);
            const Tensor<float> t = to_tensor<float>(ts);
            const Tensor<float> y = chain.forward_train(x, tapes);
            Tensor<float> gy;
            const double l = loss(y, t, cfg.loss, &gy);
            if (!std::isfinite(l)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index));
            }
            std::fill(grad.begin(), grad.end(), 0.0f);
            chain.backward(tapes, std::move(gy), grad);
            adam_step(chain.theta(), grad, st, lr, cfg);
            epoch_loss += l * static_cast<double>(b1 - b0);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss / static_cast<double>(order.size());
        rec.lr = lr;
        const bool periodic = cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0;
        if (opt.validation && (periodic || epoch + 1 == cfg.epochs)) {
            const auto ev = evaluate(chain, opt.validation->inputs, opt.validation->references);
            rec.val_psnr = ev.model.aggregate.psnr_mean;
            rec.val_ssim = ev.model.aggregate.ssim_mean;
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        st.history.epochs.push_back(rec);
        st.epoch = epoch + 1;

        if (!opt.log_csv.empty()) {
            const bool fresh_file = !std::filesystem::exists(opt.log_csv);
            std::ofstream log(opt.log_csv, std::ios::app);
            if (!log) throw IoError("cannot write training log " + opt.log_csv.string());
            if (fresh_file) log << "epoch,loss,lr,time\n";
            log << std::setprecision(10) << rec.epoch << ',' << rec.loss << ',' << rec.lr << ','
                << rec.seconds << '\n';
        }
        if (periodic && !opt.checkpoint_dir.empty()) {
            save_checkpoint(opt.checkpoint_dir / ("epoch_" + std::to_string(st.epoch)), chain, st,
                            config_json(cfg));
        }
        if (opt.on_epoch) opt.on_epoch(rec);
    }
    return st;
}

}  // namespace nacn2n
