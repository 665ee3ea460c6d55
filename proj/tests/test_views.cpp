#include <doctest.h>

#include <cmath>

#include "mve/errors.hpp"
#include "mve/imaging.hpp"
#include "mve/rng.hpp"
#include "mve/views.hpp"

using namespace mve;

namespace {

RasterImage random_raster(int w, int h, std::uint64_t seed, bool random_alpha = true) {
    Rng rng(seed);
    RasterImage img(w, h);
    for (auto& p : img.pixels)
        p = Rgba{static_cast<std::uint8_t>(rng.bounded(256)),
                 static_cast<std::uint8_t>(rng.bounded(256)),
                 static_cast<std::uint8_t>(rng.bounded(256)),
                 random_alpha ? static_cast<std::uint8_t>(rng.bounded(256)) : std::uint8_t{255}};
    return img;
}

const ViewConfig kSmallCfg{9, 2, 16};

} // namespace

TEST_CASE("Original view is exactly the composited image") {
    const RasterImage img = random_raster(24, 18, 5);
    const RasterImage out = transform_view(img, ViewKind::Original, kSmallCfg);
    CHECK(out == imaging::composite_alpha(img));
    // idempotent once composited
    CHECK(transform_view(out, ViewKind::Original, kSmallCfg) == out);
}

TEST_CASE("Grey view replicates the luminance into all channels") {
    RasterImage red(6, 6);
    for (auto& p : red.pixels) p = Rgba{255, 0, 0, 255};
    const RasterImage out = transform_view(red, ViewKind::Grey, kSmallCfg);
    for (const auto& p : out.pixels) {
        CHECK(p.r == 76);
        CHECK(p.g == 76);
        CHECK(p.b == 76);
        CHECK(p.a == 255);
    }

    const RasterImage img = random_raster(20, 15, 6);
    const RasterImage grey = transform_view(img, ViewKind::Grey, kSmallCfg);
    const GreyImage expected = imaging::to_grey(imaging::composite_alpha(img));
    for (std::size_t i = 0; i < grey.pixels.size(); ++i) {
        CHECK(grey.pixels[i].r == grey.pixels[i].g);
        CHECK(grey.pixels[i].g == grey.pixels[i].b);
        CHECK(grey.pixels[i].r == expected.pixels[i]);
    }
}

TEST_CASE("Skeleton view matches the masked binarize+thin pipeline exactly") {
    const RasterImage img = random_raster(32, 32, 7);
    const RasterImage out = transform_view(img, ViewKind::Skeleton, kSmallCfg);

    const GreyImage grey = imaging::to_grey(imaging::composite_alpha(img));
    BinaryImage binary = imaging::binarize_adaptive(grey, kSmallCfg.blocksize, kSmallCfg.offset);
    for (std::size_t i = 0; i < binary.pixels.size(); ++i)
        if (img.pixels[i].a == 0) binary.pixels[i] = 0;
    const BinaryImage skeleton = imaging::skeletonize(binary);

    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const bool white = out.pixels[i].r == 255 && out.pixels[i].g == 255 && out.pixels[i].b == 255;
        const bool black = out.pixels[i].r == 0 && out.pixels[i].g == 0 && out.pixels[i].b == 0;
        CHECK((white || black));
        CHECK(white == (skeleton.pixels[i] != 0));
    }
}

TEST_CASE("Skeleton view of a fully transparent image is empty") {
    RasterImage img = random_raster(24, 24, 8);
    for (auto& p : img.pixels) p.a = 0;
    const RasterImage out = transform_view(img, ViewKind::Skeleton, kSmallCfg);
    for (const auto& p : out.pixels) {
        CHECK(p.r == 0);
        CHECK(p.g == 0);
        CHECK(p.b == 0);
    }
}

TEST_CASE("Skeleton view propagates bad blocksizes") {
    const RasterImage img = random_raster(8, 8, 9);
    ViewConfig bad = kSmallCfg;
    bad.blocksize = 4;
    CHECK_THROWS_AS(transform_view(img, ViewKind::Skeleton, bad), EvenOrTooSmallBlocksize);
}

TEST_CASE("view transforms preserve dimensions") {
    const RasterImage img = random_raster(17, 11, 10);
    for (ViewKind view : {ViewKind::Original, ViewKind::Grey, ViewKind::Skeleton}) {
        const RasterImage out = transform_view(img, view, kSmallCfg);
        CHECK(out.width == img.width);
        CHECK(out.height == img.height);
    }
}

TEST_CASE("prepare_input without resampling is pixel/255") {
    ViewConfig cfg = kSmallCfg;
    cfg.input_side = 12;
    const RasterImage img = random_raster(12, 12, 11, false);
    const ModelInput input = prepare_input(img, cfg);
    CHECK(input.side == 12);
    CHECK(input.values.size() == 12u * 12u * 3u);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * 12 + x) * 3;
            CHECK(input.values[base + 0] == img.at(x, y).r / 255.0f);
            CHECK(input.values[base + 1] == img.at(x, y).g / 255.0f);
            CHECK(input.values[base + 2] == img.at(x, y).b / 255.0f);
        }
}

TEST_CASE("prepare_input of a uniform image is uniform") {
    ViewConfig cfg = kSmallCfg;
    cfg.input_side = 16;
    RasterImage img(128, 128, Rgba{37, 91, 200, 255});
    const ModelInput input = prepare_input(img, cfg);
    for (std::size_t i = 0; i < input.values.size(); i += 3) {
        CHECK(input.values[i + 0] == 37 / 255.0f);
        CHECK(input.values[i + 1] == 91 / 255.0f);
        CHECK(input.values[i + 2] == 200 / 255.0f);
    }
}

TEST_CASE("resize_nearest matches a brute-force index-map oracle") {
    const RasterImage img = random_raster(100, 80, 12, false);
    const RasterImage out = resize_nearest(img, 64);
    REQUIRE(out.width == 64);
    REQUIRE(out.height == 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int sx = static_cast<int>(std::floor(100.0 * x / 64.0));
            const int sy = static_cast<int>(std::floor(80.0 * y / 64.0));
            CHECK(out.at(x, y) == img.at(sx, sy));
        }
}

TEST_CASE("prepare_input values stay in [0,1] and size follows the config") {
    ViewConfig cfg = kSmallCfg;
    cfg.input_side = 20;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const RasterImage img = random_raster(31 + static_cast<int>(seed) * 13, 27, seed);
        const ModelInput input = prepare_input(img, cfg);
        CHECK(input.values.size() == 20u * 20u * 3u);
        for (float v : input.values) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("view names round-trip") {
    for (ViewKind view : {ViewKind::Original, ViewKind::Grey, ViewKind::Skeleton})
        CHECK(view_from_name(view_name(view)) == view);
    CHECK_THROWS_AS(view_from_name("X"), ParseError);
}
