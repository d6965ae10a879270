// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "nacn2n/errors.hpp"

namespace nacn2n {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kRawMagic{'N', 'A', 'C', 'G'};
constexpr std::uint8_t kRawVersion = 0x01;

void check_dims(int h, int w) {
    if (h < 1 || w < 1) {
        throw DomainError("image dimensions must be positive, got " + std::to_string(h) + "x" +
                          std::to_string(w));
    }
}

template <typename T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

template <typename T>
T from_little_endian(T v) {
    return to_little_endian(v);
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string channel_description(int color_type) {
    switch (color_type) {
        case PNG_COLOR_TYPE_GRAY_ALPHA: return "2 channels (gray+alpha)";
        case PNG_COLOR_TYPE_RGB: return "3 channels (RGB)";
        case PNG_COLOR_TYPE_RGB_ALPHA: return "4 channels (RGBA)";
        case PNG_COLOR_TYPE_PALETTE: return "3 channels (palette)";
        default: return "unknown channel layout";
    }
}

// libpng reports errors through longjmp. Everything with a destructor lives in
// the caller's frame, created before setjmp, so unwinding skips nothing.
struct PngReadResult {
    int height = 0;
    int width = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<std::uint8_t> bytes;
    std::string error;
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg ? msg : "libpng error";
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void read_png_rows(std::FILE* fp, PngReadResult& out) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out.error, png_error_fn,
                                             png_warning_fn);
    if (!png) {
        out.error = "cannot allocate png reader";
        return;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        out.error = "cannot allocate png info";
        return;
    }
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        if (out.error.empty()) out.error = "malformed png";
        return;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.color_type = png_get_color_type(png, info);
    if (out.color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        return;
    }
    if (out.bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        out.bit_depth = 8;
    }
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    out.bytes.resize(rowbytes * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

bool write_png_rows(std::FILE* fp, int h, int w, int bit_depth, std::vector<std::uint8_t>& bytes,
                    std::string& error) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                              png_warning_fn);
    if (!png) {
        error = "cannot allocate png writer";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        error = "cannot allocate png info";
        return false;
    }
    const std::size_t rowbytes = static_cast<std::size_t>(w) * (bit_depth / 8);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = bytes.data() + rowbytes * y;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        if (error.empty()) error = "png write failed";
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

ImageGrid load_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    PngReadResult r;
    read_png_rows(fp.get(), r);
    if (!r.error.empty()) throw FormatError(path.string() + ": " + r.error);
    if (r.color_type != PNG_COLOR_TYPE_GRAY) {
        throw FormatError(path.string() + ": expected a single-channel grayscale image, found " +
                          channel_description(r.color_type));
    }
    check_dims(r.height, r.width);
    const std::size_t n = static_cast<std::size_t>(r.height) * r.width;
    std::vector<float> px(n);
    ValueRange range;
    if (r.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<float>(r.bytes[i]);
        range = {0.0, 255.0};
    } else if (r.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(r.bytes[2 * i]) << 8) | r.bytes[2 * i + 1];
            px[i] = static_cast<float>(v);
        }
        range = {0.0, 65535.0};
    } else {
        throw FormatError(path.string() + ": unsupported bit depth " + std::to_string(r.bit_depth));
    }
    return ImageGrid(r.height, r.width, std::move(px), range, path.stem().string());
}

ImageGrid load_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<char, 4> magic{};
    std::uint8_t version = 0;
    std::uint32_t h = 0, w = 0;
    in.read(magic.data(), 4);
    in.read(reinterpret_cast<char*>(&version), 1);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    if (!in) throw FormatError(path.string() + ": truncated raw-grid header");
    if (magic != kRawMagic) throw FormatError(path.string() + ": bad raw-grid magic");
    if (version != kRawVersion) {
        throw FormatError(path.string() + ": unsupported raw-grid version " +
                          std::to_string(version));
    }
    h = from_little_endian(h);
    w = from_little_endian(w);
    check_dims(static_cast<int>(h), static_cast<int>(w));
    std::vector<float> px(static_cast<std::size_t>(h) * w);
    in.read(reinterpret_cast<char*>(px.data()),
            static_cast<std::streamsize>(px.size() * sizeof(float)));
    if (!in) throw FormatError(path.string() + ": truncated raw-grid payload");
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after raw-grid payload");
    }
    for (auto& v : px) v = from_little_endian(v);
    ImageGrid img(static_cast<int>(h), static_cast<int>(w), std::move(px), kUnitRange,
                  path.stem().string());
    if (!img.all_finite()) throw FormatError(path.string() + ": non-finite pixel in payload");
    return img;
}

void save_raw(const ImageGrid& img, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const auto h = to_little_endian(static_cast<std::uint32_t>(img.height()));
    const auto w = to_little_endian(static_cast<std::uint32_t>(img.width()));
    out.write(kRawMagic.data(), 4);
    out.write(reinterpret_cast<const char*>(&kRawVersion), 1);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(img.pixels().data()),
                  static_cast<std::streamsize>(img.size() * sizeof(float)));
    } else {
        for (float v : img.pixels()) {
            const float le = to_little_endian(v);
            out.write(reinterpret_cast<const char*>(&le), sizeof(float));
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void save_png(const ImageGrid& img, const fs::path& path, int bit_depth) {
    const double lo = img.range().lo;
    const double hi = img.range().hi;
    if (!(hi > lo)) throw DomainError("degenerate value range for png export");
    const double levels = bit_depth == 8 ? 255.0 : 65535.0;
    const std::size_t n = img.size();
    std::vector<std::uint8_t> bytes(n * (bit_depth / 8));
    const auto px = img.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = px[i];
        if (v < lo || v > hi) {
            throw RangeError("pixel value " + std::to_string(v) + " outside declared range [" +
                             std::to_string(lo) + ", " + std::to_string(hi) +
                             "]; clip before saving as png");
        }
        const double t = (v - lo) / (hi - lo);
        const auto q = static_cast<unsigned>(
            std::min(levels, std::floor(t * levels + 0.5)));
        if (bit_depth == 8) {
            bytes[i] = static_cast<std::uint8_t>(q);
        } else {
            bytes[2 * i] = static_cast<std::uint8_t>(q >> 8);
            bytes[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
        }
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    std::string error;
    if (!write_png_rows(fp.get(), img.height(), img.width(), bit_depth, bytes, error)) {
        throw IoError(path.string() + ": " + error);
    }
}

}  // namespace

ImageGrid::ImageGrid(int height, int width, ValueRange range, std::string id)
    : height_(height), width_(width), range_(range), id_(std::move(id)) {
    check_dims(height, width);
    pixels_.assign(static_cast<std::size_t>(height) * width, 0.0f);
}

ImageGrid::ImageGrid(int height, int width, std::vector<float> pixels, ValueRange range,
                     std::string id)
    : height_(height), width_(width), pixels_(std::move(pixels)), range_(range),
      id_(std::move(id)) {
    check_dims(height, width);
    if (pixels_.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("pixel buffer of size " + std::to_string(pixels_.size()) +
                         " does not match " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
}

bool ImageGrid::all_finite() const noexcept {
    return std::all_of(pixels_.begin(), pixels_.end(), [](float v) { return std::isfinite(v); });
}

void validate(const ImageGrid& img) {
    check_dims(img.height(), img.width());
    if (!img.all_finite()) {
        throw DomainError("image '" + img.id() + "' contains non-finite pixels");
    }
}

ImageFormat parse_image_format(const std::string& name) {
    if (name == "png8") return ImageFormat::png8;
    if (name == "png16") return ImageFormat::png16;
    if (name == "raw") return ImageFormat::raw;
    throw ConfigError("unknown image format '" + name + "' (expected png8, png16 or raw)");
}

std::string to_string(ImageFormat f) {
    switch (f) {
        case ImageFormat::png8: return "png8";
        case ImageFormat::png16: return "png16";
        case ImageFormat::raw: return "raw";
    }
    return "?";
}

ImageGrid load_image(const fs::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    std::array<unsigned char, 8> sig{};
    probe.read(reinterpret_cast<char*>(sig.data()), 8);
    const auto got = probe.gcount();
    probe.close();
    if (got >= 4 && std::memcmp(sig.data(), kRawMagic.data(), 4) == 0) return load_raw(path);
    if (got == 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return load_png(path);
    throw FormatError(path.string() + ": neither a PNG nor a raw-grid file");
}

void save_image(const ImageGrid& img, const fs::path& path, ImageFormat format) {
    validate(img);
    switch (format) {
        case ImageFormat::raw: save_raw(img, path); return;
        case ImageFormat::png8: save_png(img, path, 8); return;
        case ImageFormat::png16: save_png(img, path, 16); return;
    }
}

ImageGrid normalize(const ImageGrid& img) {
    validate(img);
    const double lo = img.range().lo;
    const double hi = img.range().hi;
    if (!(hi > lo)) {
        throw DomainError("cannot normalize image '" + img.id() + "': degenerate value range");
    }
    ImageGrid out = img;
    out.set_range(kUnitRange);
    if (img.range() == kUnitRange) return out;
    const double scale = hi - lo;
    for (auto& v : out.pixels()) v = static_cast<float>((static_cast<double>(v) - lo) / scale);
    return out;
}

ImageGrid denormalize(const ImageGrid& img, ValueRange target) {
    validate(img);
    if (img.range() != kUnitRange) {
        throw DomainError("denormalize expects a normalized (0,1) image, '" + img.id() +
                          "' declares [" + std::to_string(img.range().lo) + ", " +
                          std::to_string(img.range().hi) + "]");
    }
    if (!(target.hi > target.lo)) throw DomainError("degenerate target range");
    ImageGrid out = img;
    out.set_range(target);
    const double scale = target.hi - target.lo;
    for (auto& v : out.pixels()) {
        v = static_cast<float>(static_cast<double>(v) * scale + target.lo);
    }
    return out;
}

ImageGrid clip_for_display(const ImageGrid& img) {
    validate(img);
    ImageGrid out = img;
    for (auto& v : out.pixels()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".nacg" || ext == ".raw") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace nacn2n
