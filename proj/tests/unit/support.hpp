// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "nacn2n/image.hpp"

namespace testing {

/// Fresh empty directory under the test working directory.
std::filesystem::path scratch_dir(const std::string& name);

nacn2n::ImageGrid random_grid(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0);
nacn2n::ImageGrid constant_grid(int h, int w, float v, const std::string& id = "c");

}  // namespace testing
