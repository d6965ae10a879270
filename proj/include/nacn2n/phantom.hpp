// SPDX-License-Identifier: Apache-2.0
//
// Shepp-Logan-style ellipse phantoms with known clean intensities.
#pragma once

#include <cstdint>
#include <vector>

#include "nacn2n/image.hpp"

namespace nacn2n {

struct Ellipse {
    double intensity;  // additive
    double a, b;       // semi-axes, in [-1,1] image coordinates
    double x0, y0;
    double theta_deg;
};

/// The modified Shepp-Logan ellipse table (Toft's contrast-enhanced variant).
std::vector<Ellipse> shepp_logan_ellipses();

/// Rasterizes ellipses on an h x w grid covering [-1,1]^2, clamped to [0,1].
ImageGrid rasterize(const std::vector<Ellipse>& ellipses, int height, int width,
                    const std::string& id = {});

/// A randomly jittered Shepp-Logan phantom: the standard layout with perturbed
/// centres, axes, angles and intensities plus a few extra random ellipses.
ImageGrid random_phantom(int size, std::uint64_t seed, const std::string& id = {});

/// `count` phantoms with ids "<prefix>_0000", ... ; phantom i uses derive_seed(seed, {i}).
std::vector<ImageGrid> make_phantoms(int count, int size, std::uint64_t seed,
                                     const std::string& prefix = "phantom");

}  // namespace nacn2n
