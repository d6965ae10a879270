// SPDX-License-Identifier: Apache-2.0
//
// Minimal grayscale raster plots: line charts and labelled image panels.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nacn2n/image.hpp"

namespace nacn2n {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 480;
    int height = 320;
};

/// Renders to a normalized canvas (white background, dark ink).
ImageGrid render(const LinePlot& plot);
void save_plot(const LinePlot& plot, const std::filesystem::path& path);

/// Side-by-side panels with a caption strip under each. Images are clipped to [0,1].
ImageGrid render_panels(const std::vector<ImageGrid>& images,
                        const std::vector<std::string>& labels, int scale = 2);

/// Draws `text` in a 5x7 bitmap font with its top-left at (x, y).
void draw_text(ImageGrid& canvas, int x, int y, const std::string& text, float ink = 0.0f);
int text_width(const std::string& text);

}  // namespace nacn2n
