// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "nacn2n/errors.hpp"
#include "nacn2n/noise.hpp"

namespace nacn2n {

std::vector<Ellipse> shepp_logan_ellipses() {
    return {
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
        {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
        {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
        {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
        {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
        {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
    };
}

ImageGrid rasterize(const std::vector<Ellipse>& ellipses, int height, int width,
                    const std::string& id) {
    if (height < 1 || width < 1) throw ShapeError("phantom size must be positive");
    ImageGrid img(height, width, kUnitRange, id);
    for (int r = 0; r < height; ++r) {
        // y axis points up
        const double y = 1.0 - (2.0 * r + 1.0) / height;
        for (int c = 0; c < width; ++c) {
            const double x = (2.0 * c + 1.0) / width - 1.0;
            double v = 0;
            for (const auto& e : ellipses) {
                const double t = e.theta_deg * std::numbers::pi / 180.0;
                const double dx = x - e.x0;
                const double dy = y - e.y0;
                const double u = dx * std::cos(t) + dy * std::sin(t);
                const double w = -dx * std::sin(t) + dy * std::cos(t);
                if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.intensity;
            }
            img.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return img;
}

ImageGrid random_phantom(int size, std::uint64_t seed, const std::string& id) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto ellipses = shepp_logan_ellipses();
    const double scale = 1.0 + 0.08 * u(rng);
    for (std::size_t i = 0; i < ellipses.size(); ++i) {
        auto& e = ellipses[i];
        e.a *= scale * (1.0 + 0.1 * u(rng));
        e.b *= scale * (1.0 + 0.1 * u(rng));
        e.x0 = e.x0 * scale + (i < 2 ? 0.03 : 0.06) * u(rng);
        e.y0 = e.y0 * scale + (i < 2 ? 0.03 : 0.06) * u(rng);
        e.theta_deg += 10.0 * u(rng);
        if (i >= 2) e.intensity *= 1.0 + 0.5 * u(rng);
    }
    // the outer pair stays concentric so the skull ring keeps its width
    ellipses[1].x0 = ellipses[0].x0;
    std::uniform_int_distribution<int> extra(2, 5);
    const int n = extra(rng);
    for (int k = 0; k < n; ++k) {
        Ellipse e;
        e.a = 0.04 + 0.16 * (0.5 + 0.5 * u(rng));
        e.b = 0.04 + 0.16 * (0.5 + 0.5 * u(rng));
        e.x0 = 0.45 * u(rng);
        e.y0 = 0.6 * u(rng);
        e.theta_deg = 90.0 * u(rng);
        e.intensity = 0.25 * u(rng);
        ellipses.push_back(e);
    }
    return rasterize(ellipses, size, size, id);
}

std::vector<ImageGrid> make_phantoms(int count, int size, std::uint64_t seed,
                                     const std::string& prefix) {
    if (count < 0) throw ConfigError("phantom count must be >= 0", "count");
    std::vector<ImageGrid> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "_%04d", i);
        out.push_back(random_phantom(size, derive_seed(seed, {static_cast<std::uint64_t>(i)}), prefix + buf));
    }
    return out;
}

}  // namespace nacn2n
