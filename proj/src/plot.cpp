// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "nacn2n/errors.hpp"

namespace nacn2n {

namespace {

using Glyph = std::array<std::uint8_t, 7>;

const std::map<char, Glyph>& font() {
    static const std::map<char, Glyph> f{
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
        {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
        {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
        {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
        {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
        {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
        {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
        {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
        {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
        {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
        {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
        {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
        {' ', {0, 0, 0, 0, 0, 0, 0}},
    };
    return f;
}

void put(ImageGrid& c, int x, int y, float v) {
    if (x >= 0 && y >= 0 && x < c.width() && y < c.height()) c.at(y, x) = v;
}

void line(ImageGrid& c, int x0, int y0, int x1, int y1, float v, int dash = 0) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int step = 0;
    while (true) {
        if (dash == 0 || (step / dash) % 2 == 0) put(c, x0, y0, v);
        ++step;
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void marker(ImageGrid& c, int x, int y, int kind, float v) {
    for (int d = -2; d <= 2; ++d) {
        switch (kind % 3) {
            case 0:
                for (int e = -2; e <= 2; ++e) put(c, x + d, y + e, v);
                break;
            case 1:
                put(c, x + d, y + d, v);
                put(c, x + d, y - d, v);
                break;
            default:
                put(c, x + d, y, v);
                put(c, x, y + d, v);
        }
    }
}

}  // namespace

int text_width(const std::string& text) { return static_cast<int>(text.size()) * 6; }

void draw_text(ImageGrid& canvas, int x, int y, const std::string& text, float ink) {
    const auto& f = font();
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
        auto it = f.find(ch);
        if (it == f.end()) it = f.find('_');
        for (int r = 0; r < 7; ++r) {
            for (int col = 0; col < 5; ++col) {
                if (it->second[r] & (0x10 >> col)) put(canvas, x + 6 * static_cast<int>(i) + col, y + r, ink);
            }
        }
    }
}

ImageGrid render(const LinePlot& p) {
    if (p.width < 120 || p.height < 100) throw ShapeError("plot canvas too small");
    ImageGrid c(p.height, p.width, kUnitRange);
    std::fill(c.pixels().begin(), c.pixels().end(), 1.0f);
    const int left = 60, right = 14, top = 22, bottom = 34;
    const int x0 = left, x1 = p.width - right, y0 = p.height - bottom, y1 = top;

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : p.series) {
        if (s.x.size() != s.y.size()) throw ShapeError("series '" + s.label + "' has mismatched x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0))); };
    auto py = [&](double y) { return y0 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (y0 - y1))); };

    line(c, x0, y0, x1, y0, 0.0f);
    line(c, x0, y0, x0, y1, 0.0f);
    for (int k = 0; k <= 4; ++k) {
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        const int yy = py(yv);
        line(c, x0 - 3, yy, x0, yy, 0.0f);
        line(c, x0 + 1, yy, x1, yy, 0.85f, 2);
        const std::string t = fmt(yv);
        draw_text(c, x0 - 5 - text_width(t), yy - 3, t);
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const int xx = px(xv);
        line(c, xx, y0, xx, y0 + 3, 0.0f);
        const std::string tx = fmt(xv);
        draw_text(c, xx - text_width(tx) / 2, y0 + 6, tx);
    }
    draw_text(c, (p.width - text_width(p.title)) / 2, 6, p.title);
    draw_text(c, (x0 + x1 - text_width(p.x_label)) / 2, p.height - 12, p.x_label);
    draw_text(c, 4, 6, p.y_label);

    for (std::size_t si = 0; si < p.series.size(); ++si) {
        const auto& s = p.series[si];
        const float ink = static_cast<float>(0.45 * (si % 3) / 2.0);
        const int dash = static_cast<int>(si % 2) * 4;
        bool have = false;
        int lx = 0, ly = 0;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                have = false;
                continue;
            }
            const int xx = px(s.x[i]), yy = py(s.y[i]);
            if (have) line(c, lx, ly, xx, yy, ink, dash);
            marker(c, xx, yy, static_cast<int>(si), ink);
            lx = xx;
            ly = yy;
            have = true;
        }
        const int ly0 = top + 4 + 10 * static_cast<int>(si);
        line(c, x1 - 110, ly0 + 3, x1 - 94, ly0 + 3, ink, dash);
        marker(c, x1 - 102, ly0 + 3, static_cast<int>(si), ink);
        draw_text(c, x1 - 90, ly0, s.label, ink);
    }
    return c;
}

void save_plot(const LinePlot& plot, const std::filesystem::path& path) {
    save_image(render(plot), path, ImageFormat::png8);
}

ImageGrid render_panels(const std::vector<ImageGrid>& images, const std::vector<std::string>& labels,
                        int scale) {
    if (images.empty()) throw ShapeError("no panels to render");
    if (labels.size() != images.size()) throw ShapeError("one label per panel required");
    if (scale < 1) throw ConfigError("panel scale must be >= 1", "scale");
    const int gap = 4, caption = 14;
    int ph = 0, total_w = gap;
    for (const auto& im : images) {
        ph = std::max(ph, im.height() * scale);
        total_w += std::max(im.width() * scale, text_width(labels[&im - images.data()])) + gap;
    }
    ImageGrid c(ph + caption + 2 * gap, total_w, kUnitRange);
    std::fill(c.pixels().begin(), c.pixels().end(), 1.0f);
    int ox = gap;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageGrid im = clip_for_display(images[i]);
        for (int y = 0; y < im.height() * scale; ++y) {
            for (int x = 0; x < im.width() * scale; ++x) put(c, ox + x, gap + y, im.at(y / scale, x / scale));
        }
        draw_text(c, ox, gap + ph + 4, labels[i]);
        ox += std::max(im.width() * scale, text_width(labels[i])) + gap;
    }
    return c;
}

}  // namespace nacn2n
