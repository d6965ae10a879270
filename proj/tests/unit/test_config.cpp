// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "nacn2n/config.hpp"
#include "nacn2n/errors.hpp"
#include "support.hpp"

using namespace nacn2n;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string write_file(const std::string& name, const std::string& text) {
    const auto dir = testing::scratch_dir("config_" + name);
    const auto p = dir / (name + ".json");
    std::ofstream(p) << text;
    return p.string();
}

}  // namespace

TEST_CASE("defaults") {
    const auto r = resolve_config(std::nullopt, {});
    const auto& c = r.config;
    CHECK(c.model.backbone.name == "unet");
    CHECK(c.model.modules == 5);
    CHECK(c.train.epochs == 60);
    CHECK(c.train.batch_size == 4);
    CHECK(c.noise.poisson_scale == 255.0);
    CHECK(c.noise.gaussian_variance == 15.0);
    CHECK(c.data.copies == 2);
    CHECK(root_config_from_json(r.json).train.base_lr == 1e-4);
}

TEST_CASE("defaults < file < flags") {
    const auto f = write_file("prec", R"({"train": {"epochs": 7, "batch_size": 2}, "noise": {"gaussian_variance": 5}})");
    const auto r = resolve_config(f, {{"train.epochs", "9"}});
    CHECK(r.config.train.epochs == 9);
    CHECK(r.config.train.batch_size == 2);
    CHECK(r.config.noise.gaussian_variance == 5.0);
    CHECK(r.config.train.beta2 == 0.99);
}

TEST_CASE("unknown keys are rejected by name") {
    const auto f = write_file("unknown", R"({"train": {"epoch": 7}})");
    CHECK_THROWS_WITH(resolve_config(f, {}), ContainsSubstring("train.epoch"));
    try {
        resolve_config(std::nullopt, {{"model.widht", "3"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "model.widht");
    }
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"train.epochs", "\"many\""}}), ConfigError);
    const auto bad = write_file("badjson", "{not json");
    CHECK_THROWS_AS(resolve_config(bad, {}), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"train.epochs", "-1"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"noise.gaussian_variance", "-2"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"data.copies", "1"}}), ConfigError);
}

TEST_CASE("switching backbone picks its canonical sizes") {
    const auto r = resolve_config(std::nullopt, {{"model.name", "resnet"}});
    CHECK(r.config.model.backbone.depth == 8);
    const auto s = resolve_config(std::nullopt, {{"model.depth", "3"}, {"model.name", "resnet"}});
    CHECK(s.config.model.backbone.depth == 3);
}

TEST_CASE("poisson term can be switched off") {
    const auto r = resolve_config(std::nullopt, {{"noise.poisson_scale", "off"}});
    CHECK_FALSE(r.config.noise.poisson_enabled());
    CHECK(r.json["noise"]["poisson_scale"] == "off");
    CHECK(noise_spec_from_json(noise_spec_to_json(r.config.noise)).poisson_scale == std::nullopt);
}

TEST_CASE("seed environment override covers every seed") {
    const auto r = resolve_config(std::nullopt, {}, "123");
    CHECK(r.config.noise.seed == 123);
    CHECK(r.config.data.seed == 123);
    CHECK(r.config.model.init_seed == 123);
    CHECK(r.config.train.seed == 123);
    CHECK_FALSE(r.notes.empty());
    CHECK_THROWS_AS(resolve_config(std::nullopt, {}, "12x"), ConfigError);
    CHECK(resolve_config(std::nullopt, {}, "").config.train.seed == 2024);
}

TEST_CASE("json round trip and hashing") {
    const auto r = resolve_config(std::nullopt, {{"train.epochs", "3"}});
    const RootConfig back = root_config_from_json(to_json(r.config));
    CHECK(to_json(back) == to_json(r.config));
    CHECK(config_hash(to_json(back)) == config_hash(r.json));
    CHECK(config_hash(to_json(back)) != config_hash(resolve_config(std::nullopt, {}).json));
    CHECK(hex_hash(0xabcULL) == "0000000000000abc");
}
