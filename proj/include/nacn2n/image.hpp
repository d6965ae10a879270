// SPDX-License-Identifier: Apache-2.0
//
// Grayscale image grids, normalization and file I/O (PNG and the raw NACG grid).
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nacn2n {

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;

    bool operator==(const ValueRange&) const = default;
};

inline constexpr ValueRange kUnitRange{0.0, 1.0};

/// A 2-D grayscale intensity array stored row-major with a top-left origin.
///
/// `range` is the declared domain of the stored values (0-255 for 8-bit PNG,
/// 0-65535 for 16-bit, 0-1 once normalized). Corrupted images may carry
/// values outside their declared range; only PNG export enforces it.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int height, int width, ValueRange range = kUnitRange, std::string id = {});
    ImageGrid(int height, int width, std::vector<float> pixels, ValueRange range = kUnitRange,
              std::string id = {});

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    float& at(int y, int x) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int y, int x) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<float> pixels() noexcept { return pixels_; }
    std::span<const float> pixels() const noexcept { return pixels_; }

    const ValueRange& range() const noexcept { return range_; }
    void set_range(ValueRange r) noexcept { range_ = r; }

    const std::string& id() const noexcept { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    /// Optional grouping tag (e.g. patient) used by group-aware splits.
    const std::string& group() const noexcept { return group_; }
    void set_group(std::string g) { group_ = std::move(g); }

    bool same_shape(const ImageGrid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool all_finite() const noexcept;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> pixels_;
    ValueRange range_ = kUnitRange;
    std::string id_;
    std::string group_;
};

enum class ImageFormat { png8, png16, raw };

ImageFormat parse_image_format(const std::string& name);
std::string to_string(ImageFormat f);

/// Loads an 8/16-bit grayscale PNG or a raw NACG grid (detected by signature).
/// The image id defaults to the file stem.
ImageGrid load_image(const std::filesystem::path& path);

/// Writes `img`. PNG targets quantize (v - lo) / (hi - lo) with round-half-up
/// and reject pixels outside the declared range.
void save_image(const ImageGrid& img, const std::filesystem::path& path, ImageFormat format);

ImageGrid normalize(const ImageGrid& img);
ImageGrid denormalize(const ImageGrid& img, ValueRange target);
ImageGrid clip_for_display(const ImageGrid& img);

/// Checks the dimension and finiteness invariants; throws DomainError otherwise.
void validate(const ImageGrid& img);

/// Lists loadable image files (.png, .nacg, .raw) in a directory, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace nacn2n
