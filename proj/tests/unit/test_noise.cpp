// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "nacn2n/errors.hpp"
#include "nacn2n/noise.hpp"
#include "support.hpp"

using namespace nacn2n;

namespace {

struct Moments {
    double mean = 0;
    double var = 0;
};

Moments moments(const std::vector<float>& v) {
    double s = 0, s2 = 0;
    for (float x : v) s += x;
    const double m = s / v.size();
    for (float x : v) s2 += (x - m) * (x - m);
    return {m, s2 / (v.size() - 1)};
}

}  // namespace

TEST_CASE("poisson component is exactly zero where the image is zero") {
    RandomStream rng(1);
    const auto f = sample_poisson_component(testing::constant_grid(8, 8, 0.0f), 255.0, rng);
    for (float v : f.values) CHECK(v == 0.0f);
    CHECK(f.component == NoiseComponent::poisson);
}

TEST_CASE("poisson component moments at p = 0.5, k = 255") {
    RandomStream rng(42);
    const auto f = sample_poisson_component(testing::constant_grid(1000, 1000, 0.5f), 255.0, rng);
    const auto m = moments(f.values);
    const double var = 0.5 / 255.0;
    CHECK(std::abs(m.mean) <= 4 * std::sqrt(var) / 1e3);
    CHECK(std::abs(m.var - var) / var <= 0.02);
}

TEST_CASE("poisson component rejects negative pixels") {
    RandomStream rng(1);
    ImageGrid g = testing::constant_grid(2, 2, 0.3f);
    g.at(1, 1) = -0.01f;
    CHECK_THROWS_AS(sample_poisson_component(g, 255.0, rng), DomainError);
}

TEST_CASE("gaussian component moments for variance 15") {
    RandomStream rng(7);
    const auto z = sample_gaussian_component(4, 4, 0.0, rng);
    for (float v : z.values) CHECK(v == 0.0f);
    const auto f = sample_gaussian_component(1000, 1000, 15.0, rng);
    const auto m = moments(f.values);
    const double var = 15.0 / (255.0 * 255.0);
    CHECK(var == Catch::Approx(2.3068e-4).epsilon(1e-4));
    CHECK(std::abs(m.mean) <= 4 * std::sqrt(var) / 1e3);
    CHECK(std::abs(m.var - var) / var <= 0.02);
}

TEST_CASE("silent spec leaves the image bit-identical") {
    const ImageGrid g = testing::random_grid(9, 7, 3);
    NoiseSpec off = NoiseSpec::off();
    const ImageGrid z = corrupt(g, off, 99);
    CHECK(std::memcmp(z.pixels().data(), g.pixels().data(), g.size() * 4) == 0);
}

TEST_CASE("corruption is deterministic per seed and unclipped") {
    const ImageGrid g = testing::random_grid(16, 16, 4);
    NoiseSpec spec;
    const ImageGrid a = corrupt(g, spec, 5);
    const ImageGrid b = corrupt(g, spec, 5);
    const ImageGrid c = corrupt(g, spec, 6);
    CHECK(std::memcmp(a.pixels().data(), b.pixels().data(), g.size() * 4) == 0);
    CHECK(std::memcmp(a.pixels().data(), c.pixels().data(), g.size() * 4) != 0);

    const ImageGrid zeros = testing::constant_grid(32, 32, 0.0f);
    const ImageGrid z = corrupt(zeros, spec, 8);
    bool below = false;
    for (float v : z.pixels()) below = below || v < 0.0f;
    CHECK(below);
}

TEST_CASE("mean of many corruptions converges to the image") {
    const ImageGrid g = testing::random_grid(4, 4, 12);
    NoiseSpec spec;
    const int n = 100000;
    std::vector<double> acc(g.size(), 0.0);
    RandomStream rng(2024);
    for (int i = 0; i < n; ++i) {
        const ImageGrid z = corrupt(g, spec, rng);
        for (std::size_t k = 0; k < g.size(); ++k) acc[k] += z.pixels()[k];
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double sd = std::sqrt(spec.variance_at(g.pixels()[k]));
        CHECK(std::abs(acc[k] / n - g.pixels()[k]) <= 4 * sd / std::sqrt(n));
    }
}

TEST_CASE("poisson variance grows with intensity") {
    ImageGrid ramp(1, 6, {0.0f, 0.2f, 0.4f, 0.6f, 0.8f, 1.0f});
    std::vector<std::vector<float>> cols(6);
    RandomStream rng(3);
    for (int i = 0; i < 40000; ++i) {
        const auto f = sample_poisson_component(ramp, 255.0, rng);
        for (int c = 0; c < 6; ++c) cols[c].push_back(f.values[c]);
    }
    double prev = -1;
    for (int c = 0; c < 6; ++c) {
        const double v = moments(cols[c]).var;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("independently seeded fields are uncorrelated") {
    RandomStream a(derive_seed(1, {1})), b(derive_seed(1, {2}));
    const auto fa = sample_gaussian_component(1000, 1000, 15.0, a);
    const auto fb = sample_gaussian_component(1000, 1000, 15.0, b);
    const auto ma = moments(fa.values), mb = moments(fb.values);
    double cov = 0;
    for (std::size_t i = 0; i < fa.values.size(); ++i) cov += (fa.values[i] - ma.mean) * (fb.values[i] - mb.mean);
    cov /= fa.values.size() - 1;
    CHECK(std::abs(cov / std::sqrt(ma.var * mb.var)) <= 0.01);
}

TEST_CASE("additivity of two gaussian specs") {
    NoiseSpec o{std::nullopt, 15.0, 0.0, 1};
    NoiseSpec s{std::nullopt, 15.0, 0.0, 2};
    const auto r = verify_additivity(testing::constant_grid(8, 8, 0.5f), o, s, 100000);
    CHECK(r.pass());
    CHECK(r.empirical_variance == Catch::Approx(30.0 / (255.0 * 255.0)).epsilon(0.05));
}

TEST_CASE("additivity with one silent spec") {
    NoiseSpec o{std::nullopt, 15.0, 0.0, 3};
    NoiseSpec s = NoiseSpec::off();
    const auto r = verify_additivity(testing::constant_grid(8, 8, 0.5f), o, s, 20000);
    CHECK(r.pass());
    CHECK(r.empirical_variance == Catch::Approx(15.0 / (255.0 * 255.0)).epsilon(0.05));
}

TEST_CASE("additivity of mixed specs matches the analytic sum") {
    NoiseSpec o{255.0, 15.0, 0.0, 5};
    NoiseSpec s{128.0, 5.0, 0.0, 6};
    const auto r = verify_additivity(testing::constant_grid(8, 8, 0.5f), o, s, 100000);
    const double expect = 0.5 / 255 + 0.5 / 128 + 20.0 / (255.0 * 255.0);
    CHECK(r.pass());
    CHECK(std::abs(r.empirical_variance - expect) / expect <= 0.05);
    CHECK(r.max_relative_deviation <= kAdditivityTolerance);
}

TEST_CASE("additivity needs enough samples") {
    NoiseSpec o, s;
    CHECK_THROWS(verify_additivity(testing::constant_grid(2, 2, 0.5f), o, s, 9999));
}

TEST_CASE("spec validation") {
    NoiseSpec bad;
    bad.gaussian_variance = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    NoiseSpec k0;
    k0.poisson_scale = 0.0;
    CHECK_THROWS_AS(validate(k0), ConfigError);
    NoiseSpec rho;
    rho.rho = 0.1;
    CHECK_THROWS_AS(validate(rho), ConfigError);
}

TEST_CASE("seed derivation is stable and tag sensitive") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
