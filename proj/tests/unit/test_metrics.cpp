// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nacn2n/backbone.hpp"
#include "nacn2n/chain.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/metrics.hpp"
#include "support.hpp"

using namespace nacn2n;
using testing::constant_grid;
using testing::random_grid;

TEST_CASE("psnr worked examples") {
    const ImageGrid a = random_grid(8, 8, 1);
    const auto same = psnr_detail(a, a);
    CHECK(same.db == 100.0);
    CHECK(same.identical);
    CHECK(psnr(constant_grid(4, 4, 0.0f, "z"), constant_grid(4, 4, 1.0f, "o")) ==
          Catch::Approx(0.0).margin(1e-12));
    ImageGrid x(2, 2, {0.1f, 0.2f, 0.3f, 0.9f});
    ImageGrid y(2, 2, {0.1f, 0.2f, 0.3f, 0.4f});
    // one pixel off by 0.5: MSE 0.0625
    CHECK(psnr(x, y) == Catch::Approx(12.0412).margin(1e-4));
    CHECK_FALSE(psnr_detail(x, y).identical);
}

TEST_CASE("psnr symmetry and scale invariance") {
    const ImageGrid a = random_grid(9, 7, 2);
    const ImageGrid b = random_grid(9, 7, 3);
    CHECK(psnr(a, b) == psnr(b, a));
    ImageGrid a2 = a, b2 = b;
    for (auto& v : a2.pixels()) v *= 4;
    for (auto& v : b2.pixels()) v *= 4;
    a2.set_range({0, 4});
    b2.set_range({0, 4});
    CHECK(psnr(a2, b2, 4.0) == Catch::Approx(psnr(a, b)).epsilon(1e-9));
    CHECK_THROWS(psnr(a, random_grid(7, 9, 4)));
}

TEST_CASE("ssim identity and constants") {
    const ImageGrid a = random_grid(16, 16, 5);
    SsimOptions win;
    win.mode = SsimMode::windowed;
    CHECK(ssim(a, a) == 1.0);
    CHECK(ssim(a, a, win) == 1.0);
    const ImageGrid c = constant_grid(12, 12, 0.3f, "c");
    CHECK(ssim(c, c) == 1.0);
    CHECK(ssim(c, c, win) == 1.0);
}

TEST_CASE("ssim 2x2 case by direct substitution") {
    ImageGrid x(2, 2, {0.f, 1.f, 0.f, 1.f});
    ImageGrid y(2, 2, {1.f, 0.f, 1.f, 0.f});
    const double c1 = 1e-4, c2 = 9e-4;
    // mu = 0.5 each, variances 0.25, covariance -0.25
    const double expect = ((2 * 0.25 + c1) * (2 * -0.25 + c2)) / ((0.25 + 0.25 + c1) * (0.5 + c2));
    CHECK(ssim(x, y) == Catch::Approx(expect).margin(1e-6));
    CHECK(ssim(x, y, c1, c2, SsimMode::global) == Catch::Approx(expect).margin(1e-6));
}

TEST_CASE("minus-c1 numerator variant breaks identity") {
    const ImageGrid a = random_grid(8, 8, 6);
    SsimOptions lit;
    lit.printed_form = true;
    const double c1 = lit.resolved_c1(), c2 = lit.resolved_c2();
    double mu = 0, var = 0;
    for (float v : a.pixels()) mu += v;
    mu /= a.size();
    for (float v : a.pixels()) var += (v - mu) * (v - mu);
    var /= a.size();
    const double expect = ((2 * mu * mu - c1) * (var + c2)) / ((2 * mu * mu + c1) * (2 * var + c2));
    CHECK(ssim(a, a, lit) == Catch::Approx(expect).epsilon(1e-9));
    CHECK(ssim(a, a, lit) != 1.0);
}

TEST_CASE("ssim symmetry and range") {
    const ImageGrid a = random_grid(20, 20, 7);
    const ImageGrid b = random_grid(20, 20, 8);
    SsimOptions win;
    win.mode = SsimMode::windowed;
    CHECK(ssim(a, b) == Catch::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(ssim(a, b, win) == Catch::Approx(ssim(b, a, win)).epsilon(1e-12));
    CHECK(ssim(a, b) >= -1.0);
    CHECK(ssim(a, b) <= 1.0);
}

TEST_CASE("windowed and global agree on constant-statistics images") {
    SsimOptions win;
    win.mode = SsimMode::windowed;
    for (float u : {0.2f, 0.7f}) {
        const ImageGrid x = constant_grid(11, 11, 0.5f, "x");
        const ImageGrid y = constant_grid(11, 11, u, "y");
        CHECK(ssim(x, y, win) == Catch::Approx(ssim(x, y)).epsilon(1e-12));
        const ImageGrid x2 = constant_grid(25, 30, 0.5f, "x");
        const ImageGrid y2 = constant_grid(25, 30, u, "y");
        CHECK(ssim(x2, y2, win) == Catch::Approx(ssim(x2, y2)).epsilon(1e-12));
    }
}

TEST_CASE("ssim rejects non-positive constants") {
    const ImageGrid a = random_grid(4, 4, 9);
    CHECK_THROWS_AS(ssim(a, a, 0.0, 1e-3, SsimMode::global), ConfigError);
    CHECK_THROWS_AS(ssim(a, a, 1e-4, -1.0, SsimMode::global), ConfigError);
}

TEST_CASE("identity model reproduces the baseline exactly") {
    BackboneConfig c = BackboneConfig::defaults_for("resnet");
    c.base_channels = 4;
    c.depth = 1;
    const ChainModel<float> chain = compose_chain<float>(build_backbone<float>(c), 2, 1);
    std::vector<ImageGrid> inputs, refs;
    for (int i = 0; i < 3; ++i) {
        ImageGrid r = random_grid(12, 12, 20 + i);
        r.set_id("im" + std::to_string(i));
        ImageGrid x = random_grid(12, 12, 40 + i);
        x.set_id(r.id());
        refs.push_back(r);
        inputs.push_back(x);
    }
    const Evaluation ev = evaluate(chain, inputs, refs);
    REQUIRE(ev.model.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(ev.model.rows[i].psnr == ev.baseline.rows[i].psnr);
        CHECK(ev.model.rows[i].ssim == ev.baseline.rows[i].ssim);
    }
    CHECK(ev.model.aggregate.psnr_mean == ev.baseline.aggregate.psnr_mean);
    CHECK(ev.model.to_csv().rfind("id,psnr,ssim,identical\n", 0) == 0);
    const auto j = ev.model.to_json();
    CHECK(j.contains("aggregate"));
    CHECK(j["per_image"].size() == 3);

    refs[1].set_id("other");
    CHECK_THROWS_AS(evaluate(chain, inputs, refs), Error);
}

TEST_CASE("scores clip outputs first") {
    ImageGrid out(2, 2, {1.5f, -0.5f, 0.5f, 0.5f});
    ImageGrid ref(2, 2, {1.0f, 0.0f, 0.5f, 0.5f});
    out.set_id("a");
    ref.set_id("a");
    const auto rep = score({out}, {ref});
    CHECK(rep.rows[0].identical);
    CHECK(rep.rows[0].psnr == 100.0);
}
