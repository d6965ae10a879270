// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>

#include "nacn2n/checkpoint.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/phantom.hpp"
#include "nacn2n/trainer.hpp"
#include "support.hpp"

using namespace nacn2n;
using Catch::Matchers::ContainsSubstring;

namespace {

ChainModel<float> tiny_chain(int modules = 2, const std::string& name = "unet") {
    BackboneConfig c = BackboneConfig::defaults_for(name);
    c.base_channels = 4;
    c.depth = 2;
    return compose_chain<float>(build_backbone<float>(c), modules, 21);
}

PairSet tiny_pairs(int n = 6, int size = 16) {
    return build_pairs(make_phantoms(n, size, 4, "p"), NoiseSpec{}, 2, PairingMode::n2n_pair, 8);
}

std::vector<double> losses(const TrainState& s) {
    std::vector<double> out;
    for (const auto& e : s.history.epochs) out.push_back(e.loss);
    return out;
}

}  // namespace

TEST_CASE("loss worked examples") {
    const ImageGrid a = testing::random_grid(4, 4, 1);
    CHECK(loss(a, a, LossKind::l2) == 0.0);
    CHECK(loss(testing::constant_grid(3, 3, 0.f), testing::constant_grid(3, 3, 1.f), LossKind::l2) == 1.0);
    ImageGrid p(1, 2, std::vector<float>{0.f, 0.5f});
    ImageGrid t(1, 2, std::vector<float>{1.f, 0.5f});
    CHECK(loss(p, t, LossKind::l1) == Catch::Approx(0.5));
    CHECK_THROWS_AS(loss(p, a, LossKind::l2), ShapeError);
    CHECK(parse_loss_kind("l1") == LossKind::l1);
    CHECK_THROWS_AS(parse_loss_kind("huber"), ConfigError);
}

TEST_CASE("tensor loss gradients") {
    Tensor<double> p(1, 1, 1, 2), t(1, 1, 1, 2), g;
    p.data = {0.0, 2.0};
    t.data = {1.0, 1.0};
    CHECK(loss<double>(p, t, LossKind::l2, &g) == 1.0);
    CHECK(g.data == std::vector<double>{-1.0, 1.0});
    CHECK(loss<double>(p, t, LossKind::l1, &g) == 1.0);
    CHECK(g.data == std::vector<double>{-0.5, 0.5});
}

TEST_CASE("learning-rate schedule halves every period") {
    TrainConfig cfg;
    CHECK(lr_schedule(0, cfg) == 1e-4);
    CHECK(lr_schedule(19, cfg) == 1e-4);
    CHECK(lr_schedule(20, cfg) == 5e-5);
    CHECK(lr_schedule(40, cfg) == 2.5e-5);
    CHECK(lr_schedule(59, cfg) == 2.5e-5);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.beta2 = 1.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("zero epochs leaves parameters untouched") {
    ChainModel<float> chain = tiny_chain();
    const std::vector<float> before(chain.theta().begin(), chain.theta().end());
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainState st = train(chain, tiny_pairs(), cfg);
    CHECK(st.history.epochs.empty());
    CHECK(std::equal(before.begin(), before.end(), chain.theta().begin()));
}

TEST_CASE("empty pair set is rejected") {
    ChainModel<float> chain = tiny_chain();
    CHECK_THROWS_AS(train(chain, PairSet{}, TrainConfig{}), TrainingError);
}

TEST_CASE("non-finite loss names the batch") {
    ChainModel<float> chain = tiny_chain(1, "resnet");
    std::vector<float> th(chain.theta().begin(), chain.theta().end());
    th.back() = std::numeric_limits<float>::quiet_NaN();
    chain.set_theta(th);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_WITH(train(chain, tiny_pairs(), cfg),
                      ContainsSubstring("epoch 0") && ContainsSubstring("batch"));
}

TEST_CASE("recorded learning rates follow the schedule") {
    ChainModel<float> chain = tiny_chain(1);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.lr_half_period = 2;
    const TrainState st = train(chain, tiny_pairs(2, 8), cfg);
    REQUIRE(st.history.epochs.size() == 5);
    for (int e = 0; e < 5; ++e) {
        CHECK(st.history.epochs[e].epoch == e);
        CHECK(st.history.epochs[e].lr == lr_schedule(e, cfg));
    }
    CHECK(st.epoch == 5);
}

TEST_CASE("identical runs give identical histories") {
    TrainConfig cfg;
    cfg.epochs = 3;
    const PairSet ps = tiny_pairs();
    ChainModel<float> a = tiny_chain(), b = tiny_chain();
    const auto la = losses(train(a, ps, cfg));
    CHECK(la == losses(train(b, ps, cfg)));
    CHECK(std::equal(a.theta().begin(), a.theta().end(), b.theta().begin()));
    TrainConfig other = cfg;
    other.seed = 5;
    ChainModel<float> c = tiny_chain();
    CHECK(losses(train(c, ps, other)) != la);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const auto dir = testing::scratch_dir("ckpt_rt");
    ChainModel<float> chain = tiny_chain(3);
    TrainConfig cfg;
    cfg.epochs = 2;
    const TrainState st = train(chain, tiny_pairs(), cfg);
    save_checkpoint(dir / "c", chain, st);
    const Checkpoint ck = load_checkpoint(dir / "c");
    CHECK(ck.modules == 3);
    CHECK(ck.backbone == chain.config());
    CHECK(ck.state.step == st.step);
    CHECK(ck.state.epoch == 2);
    CHECK(ck.state.adam_m == st.adam_m);
    CHECK(ck.state.adam_v == st.adam_v);
    CHECK(losses(ck.state) == losses(st));
    const ChainModel<float> back = restore_chain(ck);
    CHECK(std::equal(back.theta().begin(), back.theta().end(), chain.theta().begin()));
}

TEST_CASE("checkpoint format errors") {
    const auto dir = testing::scratch_dir("ckpt_bad");
    write_blob(dir / "b.bin", {1.f, 2.f});
    CHECK(read_blob(dir / "b.bin") == std::vector<float>{1.f, 2.f});
    {
        std::fstream f(dir / "b.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(read_blob(dir / "b.bin"), FormatError);
    CHECK_THROWS_WITH(load_checkpoint(dir / "missing"), ContainsSubstring("checkpoint not found"));

    ChainModel<float> chain = tiny_chain();
    save_checkpoint(dir / "c", chain, TrainState{});
    {
        std::fstream f(dir / "c" / "params.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        f.write("\x7f", 1);
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "c"), FormatError);
}

TEST_CASE("resume from a checkpoint equals straight training") {
    const auto dir = testing::scratch_dir("resume");
    const PairSet ps = tiny_pairs();
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.checkpoint_every = 3;
    ChainModel<float> straight = tiny_chain();
    const TrainState s = train(straight, ps, cfg);

    ChainModel<float> first = tiny_chain();
    TrainOptions o;
    o.checkpoint_dir = dir;
    o.stop_after = 3;
    const TrainState half = train(first, ps, cfg, o);
    CHECK(half.epoch == 3);
    const Checkpoint ck = load_checkpoint(dir / "epoch_3");
    ChainModel<float> resumed = restore_chain(ck);
    TrainOptions r;
    r.resume = ck.state;
    const TrainState done = train(resumed, ps, cfg, r);
    CHECK(losses(done) == losses(s));
    CHECK(std::equal(resumed.theta().begin(), resumed.theta().end(), straight.theta().begin()));
}

TEST_CASE("identity-start resnet begins at the corruption error") {
    ChainModel<float> chain = tiny_chain(3, "resnet");
    const PairSet ps = build_pairs(make_phantoms(3, 16, 2, "q"), NoiseSpec{}, 2,
                                   PairingMode::nac_target, 3);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const TrainingPair p = ps.materialize(i);
        const auto x = to_tensor<float>(p.input);
        const auto y = to_tensor<float>(p.target);
        CHECK(loss<float>(chain.forward(x), y, LossKind::l2, nullptr) ==
              loss<float>(x, y, LossKind::l2, nullptr));
    }
}

TEST_CASE("training log and history serialisation") {
    const auto dir = testing::scratch_dir("trainlog");
    ChainModel<float> chain = tiny_chain(1);
    TrainConfig cfg;
    cfg.epochs = 2;
    TrainOptions o;
    o.log_csv = dir / "log.csv";
    int calls = 0;
    o.on_epoch = [&](const EpochRecord&) { ++calls; };
    const TrainState st = train(chain, tiny_pairs(2, 8), cfg, o);
    CHECK(calls == 2);
    std::ifstream in(o.log_csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,loss,lr,time");
    const TrainHistory back = TrainHistory::from_json(st.history.to_json());
    REQUIRE(back.epochs.size() == 2);
    CHECK(back.epochs[1].loss == st.history.epochs[1].loss);
}

TEST_CASE("smoke training lowers the loss") {
    // 100 phantoms x 2 copies = 200 pairs of 64x64, single-module unet, 30 epochs
    BackboneConfig c = BackboneConfig::defaults_for("unet");
    c.base_channels = 4;
    ChainModel<float> chain = compose_chain<float>(build_backbone<float>(c), 1, 3);
    const PairSet ps = build_pairs(make_phantoms(100, 64, 1, "s"), NoiseSpec{}, 2,
                                   PairingMode::n2n_pair, 2);
    REQUIRE(ps.size() == 200);
    TrainConfig cfg;
    cfg.epochs = 30;
    const TrainState st = train(chain, ps, cfg);
    CHECK(st.history.epochs.back().loss < st.history.epochs.front().loss);
}
