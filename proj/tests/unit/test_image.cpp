// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "nacn2n/errors.hpp"
#include "nacn2n/image.hpp"
#include "support.hpp"

using namespace nacn2n;
using Catch::Matchers::ContainsSubstring;

namespace {

void write_rgb_png(const std::filesystem::path& p, int h, int w) {
    std::FILE* fp = std::fopen(p.string().c_str(), "wb");
    REQUIRE(fp);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(3 * w, 10);
    for (int y = 0; y < h; ++y) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

TEST_CASE("raw grid round trip is bit exact") {
    const auto dir = testing::scratch_dir("image_raw");
    ImageGrid g = testing::random_grid(8, 8, 11);
    g.at(0, 0) = -0.25f;  // raw keeps out-of-range values
    save_image(g, dir / "g.nacg", ImageFormat::raw);
    const ImageGrid back = load_image(dir / "g.nacg");
    REQUIRE(back.height() == 8);
    REQUIRE(back.width() == 8);
    CHECK(std::memcmp(back.pixels().data(), g.pixels().data(), g.size() * sizeof(float)) == 0);
    CHECK(back.range() == kUnitRange);
    CHECK(back.id() == "g");
}

TEST_CASE("raw grid byte layout") {
    const auto dir = testing::scratch_dir("image_raw_layout");
    ImageGrid g(2, 2, {0.1f, 0.2f, 0.3f, 0.4f});
    save_image(g, dir / "x.nacg", ImageFormat::raw);
    std::ifstream in(dir / "x.nacg", std::ios::binary);
    std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(b.size() == 4 + 1 + 8 + 16);
    CHECK(std::memcmp(b.data(), "NACG", 4) == 0);
    CHECK(b[4] == 0x01);
    CHECK(b[5] == 2);
    CHECK(b[6] == 0);
    CHECK(b[9] == 2);
    float f = 0;
    std::memcpy(&f, b.data() + 13 + 4, 4);  // host is little-endian here
    CHECK(f == 0.2f);
    const ImageGrid back = load_image(dir / "x.nacg");
    CHECK(back.at(0, 0) == 0.1f);
    CHECK(back.at(0, 1) == 0.2f);
    CHECK(back.at(1, 0) == 0.3f);
    CHECK(back.at(1, 1) == 0.4f);
}

TEST_CASE("raw grid rejects truncation and trailing bytes") {
    const auto dir = testing::scratch_dir("image_raw_bad");
    ImageGrid g = testing::random_grid(3, 3, 2);
    save_image(g, dir / "g.nacg", ImageFormat::raw);
    {
        std::ofstream app(dir / "g.nacg", std::ios::binary | std::ios::app);
        app.put('x');
    }
    CHECK_THROWS_AS(load_image(dir / "g.nacg"), FormatError);
    std::filesystem::resize_file(dir / "g.nacg", 20);
    CHECK_THROWS_AS(load_image(dir / "g.nacg"), FormatError);
}

TEST_CASE("png8 of zeros loads as zeros with 0-255 range") {
    const auto dir = testing::scratch_dir("image_png8");
    ImageGrid g(4, 5, ValueRange{0, 255});
    save_image(g, dir / "z.png", ImageFormat::png8);
    const ImageGrid back = load_image(dir / "z.png");
    CHECK(back.range() == ValueRange{0, 255});
    CHECK(back.height() == 4);
    CHECK(back.width() == 5);
    for (float v : back.pixels()) CHECK(v == 0.0f);
}

TEST_CASE("png8 quantization rounds half up") {
    const auto dir = testing::scratch_dir("image_png8_q");
    ImageGrid g = testing::constant_grid(2, 2, 0.5f);
    save_image(g, dir / "h.png", ImageFormat::png8);
    const ImageGrid back = load_image(dir / "h.png");
    CHECK(back.at(0, 0) == 128.0f);
}

TEST_CASE("png16 max pixel and round trip error") {
    const auto dir = testing::scratch_dir("image_png16");
    ImageGrid m(1, 1, {65535.0f}, ValueRange{0, 65535});
    save_image(m, dir / "m.png", ImageFormat::png16);
    const ImageGrid mb = load_image(dir / "m.png");
    CHECK(mb.at(0, 0) == 65535.0f);
    CHECK(mb.range() == ValueRange{0, 65535});

    const ImageGrid g = testing::random_grid(16, 16, 5);
    save_image(g, dir / "g.png", ImageFormat::png16);
    const ImageGrid back = normalize(load_image(dir / "g.png"));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(back.pixels()[i] - g.pixels()[i]) <= 1.0 / 65535 + 1e-7);
    }
}

TEST_CASE("png save rejects out of range pixels") {
    const auto dir = testing::scratch_dir("image_png_range");
    ImageGrid g = testing::constant_grid(2, 2, 1.2f);
    CHECK_THROWS_AS(save_image(g, dir / "bad.png", ImageFormat::png8), RangeError);
    CHECK_NOTHROW(save_image(clip_for_display(g), dir / "ok.png", ImageFormat::png8));
}

TEST_CASE("multi-channel png is rejected naming the channel count") {
    const auto dir = testing::scratch_dir("image_rgb");
    write_rgb_png(dir / "rgb.png", 3, 3);
    try {
        load_image(dir / "rgb.png");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("3"));
    }
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_image("definitely/not/here.png"), IoError);
}

TEST_CASE("normalize maps declared range to unit range") {
    ImageGrid g(1, 3, {0.0f, 51.0f, 255.0f}, ValueRange{0, 255}, "n");
    const ImageGrid n = normalize(g);
    CHECK(n.range() == kUnitRange);
    CHECK(n.at(0, 0) == 0.0f);
    CHECK(n.at(0, 1) == Catch::Approx(0.2).epsilon(1e-7));
    CHECK(n.at(0, 2) == 1.0f);
    CHECK(n.id() == "n");
    CHECK(g.at(0, 1) == 51.0f);  // input untouched

    const ImageGrid u = testing::random_grid(4, 4, 3);
    const ImageGrid same = normalize(u);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(same.pixels()[i] == u.pixels()[i]);

    ImageGrid bad(1, 1, {3.0f}, ValueRange{3, 3});
    CHECK_THROWS(normalize(bad));
}

TEST_CASE("normalize is affine") {
    const ImageGrid base = testing::random_grid(6, 6, 9, 0, 100);
    ImageGrid a = base;
    a.set_range({0, 100});
    ImageGrid b = base;
    for (auto& v : b.pixels()) v = 2.0f * v + 10.0f;
    b.set_range({10, 210});
    const ImageGrid na = normalize(a);
    const ImageGrid nb = normalize(b);
    for (std::size_t i = 0; i < na.size(); ++i) CHECK(na.pixels()[i] == Catch::Approx(nb.pixels()[i]).margin(1e-6));
}

TEST_CASE("denormalize inverts normalize") {
    ImageGrid g = testing::random_grid(5, 5, 21, 0, 4095);
    g.set_range({0, 4095});
    const ImageGrid back = denormalize(normalize(g), {0, 4095});
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(back.pixels()[i] - g.pixels()[i]) <= 1e-6 * 4095 + 1e-3);
    }
    ImageGrid half = testing::constant_grid(1, 1, 0.5f);
    CHECK(denormalize(half, {0, 255}).at(0, 0) == 127.5f);
    ImageGrid zero = testing::constant_grid(1, 1, 0.0f);
    CHECK(denormalize(zero, {-1000, 3000}).at(0, 0) == -1000.0f);
    CHECK_THROWS(denormalize(g, {0, 255}));
}

TEST_CASE("clip_for_display clamps and checks finiteness") {
    ImageGrid g(1, 3, {1.2f, -0.1f, 0.4f});
    const ImageGrid c = clip_for_display(g);
    CHECK(c.at(0, 0) == 1.0f);
    CHECK(c.at(0, 1) == 0.0f);
    CHECK(c.at(0, 2) == 0.4f);
    ImageGrid nan(2, 2, std::vector<float>(4, std::nanf("")));
    CHECK_THROWS_AS(clip_for_display(nan), DomainError);
}

TEST_CASE("grid dimension invariants") {
    CHECK_THROWS(ImageGrid(0, 3));
    CHECK_THROWS(ImageGrid(2, 2, std::vector<float>(3)));
}

TEST_CASE("list_images filters and sorts") {
    const auto dir = testing::scratch_dir("image_list");
    const ImageGrid g = testing::random_grid(2, 2, 1);
    save_image(g, dir / "b.nacg", ImageFormat::raw);
    save_image(g, dir / "a.png", ImageFormat::png8);
    std::ofstream(dir / "notes.txt") << "x";
    const auto files = list_images(dir);
    REQUIRE(files.size() == 2);
    CHECK(files[0].filename() == "a.png");
    CHECK(files[1].filename() == "b.nacg");
}
