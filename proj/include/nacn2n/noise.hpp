// SPDX-License-Identifier: Apache-2.0
//
// Zero-mean mixed Poisson-Gaussian noise.
//
// Random streams are std::mt19937_64 engines whose seeds are derived with
// splitmix64 from a master seed and a list of integer tags (image id hash,
// copy index, epoch, ...). Two streams with different tag lists are treated
// as independent.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nacn2n/image.hpp"

namespace nacn2n {

/// Gaussian variances are declared on the 8-bit 0-255 scale.
inline constexpr double kGaussianScale = 255.0;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept;

class RandomStream {
public:
    static constexpr const char* kGeneratorName = "mt19937_64/splitmix64";

    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::mt19937_64& engine() noexcept { return engine_; }

    double normal(double mean, double stddev);
    std::int64_t poisson(double rate);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct NoiseSpec {
    /// Photon counts per unit normalized intensity; nullopt disables the Poisson term.
    std::optional<double> poisson_scale = 255.0;
    double gaussian_variance = 15.0;
    double rho = 0.0;
    std::uint64_t seed = 2024;

    bool poisson_enabled() const noexcept { return poisson_scale.has_value(); }
    bool is_silent() const noexcept { return !poisson_enabled() && gaussian_variance == 0.0; }
    /// Gaussian variance in normalized units (sigma^2 / 255^2).
    double gaussian_variance_normalized() const noexcept {
        return gaussian_variance / (kGaussianScale * kGaussianScale);
    }
    /// Analytic per-pixel noise variance at normalized intensity p.
    double variance_at(double p) const noexcept;

    static NoiseSpec off() { return NoiseSpec{std::nullopt, 0.0, 0.0, 0}; }
};

/// Throws ConfigError when the spec violates its invariants.
void validate(const NoiseSpec& spec);

enum class NoiseComponent { poisson, gaussian, mixed };

struct NoiseField {
    int height = 0;
    int width = 0;
    std::vector<float> values;
    NoiseComponent component = NoiseComponent::mixed;
};

struct StatCheck {
    std::string name;
    double observed = 0.0;
    double expected = 0.0;
    double relative_deviation = 0.0;
    bool pass = false;
};

struct StatsReport {
    double empirical_mean = 0.0;
    double empirical_variance = 0.0;
    std::int64_t sample_count = 0;
    double max_relative_deviation = 0.0;
    std::vector<StatCheck> checks;

    bool pass() const noexcept;
};

/// (Poisson(k p) - k p) / k per pixel; zero where p == 0.
NoiseField sample_poisson_component(const ImageGrid& img, double poisson_scale,
                                    RandomStream& rng);

/// i.i.d. N(0, sigma2 / 255^2) per pixel.
NoiseField sample_gaussian_component(int height, int width, double sigma2, RandomStream& rng);

/// img + Poisson + Gaussian components, unclipped. Disabled components draw nothing.
ImageGrid corrupt(const ImageGrid& img, const NoiseSpec& spec, RandomStream& rng);
ImageGrid corrupt(const ImageGrid& img, const NoiseSpec& spec, std::uint64_t stream_seed);

/// Monte-Carlo check that independently drawn noises add in variance.
///
/// For every distinct intensity in `img`, draws at least `n_samples` values
/// of n_o, n_s and n_o + n_s (with n_o ~ spec_o, n_s ~ spec_s on separate
/// streams) and compares Var[n_o + n_s] against both Var[n_o] + Var[n_s]
/// and the analytic p/k_o + p/k_s + (s_o^2 + s_s^2)/255^2. Passes at 5%.
StatsReport verify_additivity(const ImageGrid& img, const NoiseSpec& spec_o,
                              const NoiseSpec& spec_s, std::int64_t n_samples);

inline constexpr double kAdditivityTolerance = 0.05;
inline constexpr std::int64_t kMinAdditivitySamples = 10'000;

}  // namespace nacn2n
