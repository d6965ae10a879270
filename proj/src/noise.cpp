// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nacn2n/errors.hpp"

namespace nacn2n {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
    return h;
}

double RandomStream::normal(double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(engine_);
}

std::int64_t RandomStream::poisson(double rate) {
    if (rate <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> d(rate);
    return d(engine_);
}

double NoiseSpec::variance_at(double p) const noexcept {
    double v = gaussian_variance_normalized();
    if (poisson_scale) v += p / *poisson_scale;
    return v;
}

void validate(const NoiseSpec& spec) {
    if (spec.poisson_scale && !(*spec.poisson_scale > 0.0 && std::isfinite(*spec.poisson_scale))) {
        throw ConfigError("noise.poisson_scale must be > 0 or \"off\"", "noise.poisson_scale");
    }
    if (!(spec.gaussian_variance >= 0.0) || !std::isfinite(spec.gaussian_variance)) {
        throw ConfigError("noise.gaussian_variance must be >= 0", "noise.gaussian_variance");
    }
    if (spec.rho != 0.0) {
        throw ConfigError("noise.rho is fixed at 0 (independent noises)", "noise.rho");
    }
}

bool StatsReport::pass() const noexcept {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const StatCheck& c) { return c.pass; });
}

NoiseField sample_poisson_component(const ImageGrid& img, double poisson_scale,
                                    RandomStream& rng) {
    if (!(poisson_scale > 0.0)) throw DomainError("poisson scale must be positive");
    NoiseField field{img.height(), img.width(), std::vector<float>(img.size()),
                     NoiseComponent::poisson};
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double p = px[i];
        if (p < 0.0 || !std::isfinite(p)) {
            throw DomainError("poisson component needs non-negative normalized pixels, got " +
                              std::to_string(p) + " in '" + img.id() + "'");
        }
        const double rate = poisson_scale * p;
        const auto count = rng.poisson(rate);
        field.values[i] = static_cast<float>((static_cast<double>(count) - rate) / poisson_scale);
    }
    return field;
}

NoiseField sample_gaussian_component(int height, int width, double sigma2, RandomStream& rng) {
    if (!(sigma2 >= 0.0)) throw DomainError("gaussian variance must be non-negative");
    NoiseField field{height, width,
                     std::vector<float>(static_cast<std::size_t>(height) * width),
                     NoiseComponent::gaussian};
    if (sigma2 == 0.0) return field;
    const double sd = std::sqrt(sigma2) / kGaussianScale;
    for (auto& v : field.values) v = static_cast<float>(rng.normal(0.0, sd));
    return field;
}

ImageGrid corrupt(const ImageGrid& img, const NoiseSpec& spec, RandomStream& rng) {
    validate(spec);
    validate(img);
    ImageGrid out = img;
    if (spec.poisson_enabled()) {
        const auto field = sample_poisson_component(img, *spec.poisson_scale, rng);
        auto px = out.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) px[i] += field.values[i];
    }
    if (spec.gaussian_variance > 0.0) {
        const auto field =
            sample_gaussian_component(img.height(), img.width(), spec.gaussian_variance, rng);
        auto px = out.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) px[i] += field.values[i];
    }
    return out;
}

ImageGrid corrupt(const ImageGrid& img, const NoiseSpec& spec, std::uint64_t stream_seed) {
    RandomStream rng(stream_seed);
    return corrupt(img, spec, rng);
}

namespace {

struct Moments {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n) : 0.0; }
};

double relative_deviation(double observed, double expected) noexcept {
    if (expected == 0.0) {
        return observed == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::abs(observed - expected) / std::abs(expected);
}

// Draws one noise field (both components) for `spec` without adding the image.
std::vector<double> draw_noise(const ImageGrid& img, const NoiseSpec& spec, RandomStream& rng) {
    std::vector<double> out(img.size(), 0.0);
    if (spec.poisson_enabled()) {
        const auto f = sample_poisson_component(img, *spec.poisson_scale, rng);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += f.values[i];
    }
    if (spec.gaussian_variance > 0.0) {
        const auto f =
            sample_gaussian_component(img.height(), img.width(), spec.gaussian_variance, rng);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += f.values[i];
    }
    return out;
}

}  // namespace

StatsReport verify_additivity(const ImageGrid& img, const NoiseSpec& spec_o,
                              const NoiseSpec& spec_s, std::int64_t n_samples) {
    validate(img);
    validate(spec_o);
    validate(spec_s);
    if (n_samples < kMinAdditivitySamples) {
        throw ConfigError("verify_additivity needs at least " +
                          std::to_string(kMinAdditivitySamples) + " samples, got " +
                          std::to_string(n_samples));
    }

    // Pixel classes: distinct intensities, each mapped to its pixel indices.
    std::map<float, std::vector<std::size_t>> classes;
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) classes[px[i]].push_back(i);
    std::size_t smallest = px.size();
    for (const auto& [p, idx] : classes) smallest = std::min(smallest, idx.size());
    const auto realizations = static_cast<std::int64_t>(
        (n_samples + static_cast<std::int64_t>(smallest) - 1) / static_cast<std::int64_t>(smallest));

    struct ClassMoments {
        Moments o, s, sum;
    };
    std::map<float, ClassMoments> acc;
    Moments total;
    for (std::int64_t r = 0; r < realizations; ++r) {
        RandomStream rng_o(derive_seed(spec_o.seed, {1, static_cast<std::uint64_t>(r)}));
        RandomStream rng_s(derive_seed(spec_s.seed, {2, static_cast<std::uint64_t>(r)}));
        const auto n_o = draw_noise(img, spec_o, rng_o);
        const auto n_s = draw_noise(img, spec_s, rng_s);
        for (const auto& [p, idx] : classes) {
            auto& m = acc[p];
            for (std::size_t i : idx) {
                m.o.add(n_o[i]);
                m.s.add(n_s[i]);
                m.sum.add(n_o[i] + n_s[i]);
                total.add(n_o[i] + n_s[i]);
            }
        }
    }

    StatsReport report;
    report.sample_count = total.n;
    report.empirical_mean = total.mean;
    double worst = -1.0;
    for (const auto& [p, m] : acc) {
        const double observed = m.sum.variance();
        const double empirical_sum = m.o.variance() + m.s.variance();
        const double analytic = spec_o.variance_at(p) + spec_s.variance_at(p);
        const std::string label = "p=" + std::to_string(p);

        StatCheck emp{label + " Var[n_o+n_s] vs Var[n_o]+Var[n_s]", observed, empirical_sum,
                      relative_deviation(observed, empirical_sum), false};
        emp.pass = emp.relative_deviation <= kAdditivityTolerance;
        StatCheck ana{label + " Var[n_o+n_s] vs analytic", observed, analytic,
                      relative_deviation(observed, analytic), false};
        ana.pass = ana.relative_deviation <= kAdditivityTolerance;

        const double dev = std::max(emp.relative_deviation, ana.relative_deviation);
        if (dev > worst) {
            worst = dev;
            report.empirical_variance = observed;
        }
        report.checks.push_back(std::move(emp));
        report.checks.push_back(std::move(ana));
    }
    report.max_relative_deviation = worst;
    return report;
}

}  // namespace nacn2n
