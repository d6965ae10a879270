// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <random>

namespace testing {

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

nacn2n::ImageGrid random_grid(int h, int w, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(static_cast<float>(lo), static_cast<float>(hi));
    nacn2n::ImageGrid g(h, w, nacn2n::kUnitRange, "r" + std::to_string(seed));
    for (auto& v : g.pixels()) v = u(rng);
    return g;
}

nacn2n::ImageGrid constant_grid(int h, int w, float v, const std::string& id) {
    nacn2n::ImageGrid g(h, w, nacn2n::kUnitRange, id);
    for (auto& p : g.pixels()) p = v;
    return g;
}

}  // namespace testing
