#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "prograde/png_io.hpp"
#include "prograde/rng.hpp"
#include "prograde/slide.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace prograde;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("prograde_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// A deterministic non-trivial test pattern.
std::uint8_t pattern(int x, int y, int c, int level) {
    return static_cast<std::uint8_t>((x * 7 + y * 13 + c * 29 + level * 57) % 251);
}

// Writes a package by hand (tiles + manifest) without the synth module.
SlidePackage make_package(const fs::path& dir, int width, int height,
                          int tile_size, int n_levels, double mpp = 0.25) {
    SlidePackage slide;
    slide.root = dir;
    slide.width = width;
    slide.height = height;
    slide.mpp = mpp;
    slide.tile_size = tile_size;
    for (int l = 0; l < n_levels; ++l) {
        LevelInfo info;
        info.level = l;
        info.downsample = 1 << l;
        info.width = (width + info.downsample - 1) / info.downsample;
        info.height = (height + info.downsample - 1) / info.downsample;
        slide.levels.push_back(info);
    }
    fs::create_directories(dir);
    for (const auto& info : slide.levels) {
        int rows = (info.height + tile_size - 1) / tile_size;
        int cols = (info.width + tile_size - 1) / tile_size;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                int tw = std::min(tile_size, info.width - c * tile_size);
                int th = std::min(tile_size, info.height - r * tile_size);
                RgbImage tile(tw, th);
                for (int y = 0; y < th; ++y) {
                    for (int x = 0; x < tw; ++x) {
                        for (int ch = 0; ch < 3; ++ch) {
                            tile.at(x, y, ch) = pattern(c * tile_size + x,
                                                        r * tile_size + y, ch,
                                                        info.level);
                        }
                    }
                }
                write_png_rgb(tile_path(slide, info.level, r, c), tile);
            }
        }
    }
    write_manifest(slide);
    return slide;
}

} // namespace

TEST_CASE("png round-trip is bit-exact") {
    auto dir = temp_dir("png");
    RgbImage img(37, 23);
    Rng rng(5);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    write_png_rgb(dir / "a.png", img);
    RgbImage back = read_png_rgb(dir / "a.png");
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.pixels == img.pixels);

    Plane plane(19, 31);
    for (auto& v : plane.values) v = static_cast<std::uint8_t>(rng.below(256));
    write_png_gray(dir / "g.png", plane);
    Plane pback = read_png_gray(dir / "g.png");
    CHECK(pback.values == plane.values);
}

TEST_CASE("png writes are byte-deterministic") {
    auto dir = temp_dir("pngdet");
    RgbImage img(64, 64);
    Rng rng(9);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    write_png_rgb(dir / "a.png", img);
    write_png_rgb(dir / "b.png", img);
    std::ifstream a(dir / "a.png", std::ios::binary);
    std::ifstream b(dir / "b.png", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("package round-trip is bit-exact") {
    auto dir = temp_dir("pkg");
    make_package(dir, 700, 500, 256, 2);
    SlidePackage slide = open_slide(dir);
    REQUIRE(slide.width == 700);
    REQUIRE(slide.height == 500);
    REQUIRE(slide.levels.size() == 2);
    CHECK(slide.levels[1].width == 350);
    CHECK(slide.levels[1].height == 250);

    for (const auto& info : slide.levels) {
        RgbImage full = read_region(slide, info.level, 0, 0, info.width, info.height);
        for (int y = 0; y < info.height; y += 7) {
            for (int x = 0; x < info.width; x += 11) {
                for (int c = 0; c < 3; ++c) {
                    REQUIRE(full.at(x, y, c) == pattern(x, y, c, info.level));
                }
            }
        }
    }
}

TEST_CASE("read_region crosses tile boundaries consistently") {
    auto dir = temp_dir("region");
    SlidePackage slide = make_package(dir, 700, 500, 256, 1);
    // Region straddling four tiles.
    RgbImage r = read_region(slide, 0, 200, 200, 120, 120);
    for (int y = 0; y < 120; ++y) {
        for (int x = 0; x < 120; ++x) {
            for (int c = 0; c < 3; ++c) {
                REQUIRE(r.at(x, y, c) == pattern(200 + x, 200 + y, c, 0));
            }
        }
    }
    // Purity: repeated reads identical.
    RgbImage r2 = read_region(slide, 0, 200, 200, 120, 120);
    CHECK(r.pixels == r2.pixels);

    CHECK_THROWS_AS(read_region(slide, 0, 650, 0, 100, 10), std::out_of_range);
    CHECK_THROWS_AS(read_region(slide, 0, -1, 0, 10, 10), std::out_of_range);
    CHECK_THROWS_AS(read_region(slide, 3, 0, 0, 10, 10), std::out_of_range);
}

TEST_CASE("open_slide reports missing tiles by name") {
    auto dir = temp_dir("missing");
    SlidePackage slide = make_package(dir, 700, 500, 256, 1);
    fs::remove(tile_path(slide, 0, 1, 2));
    try {
        open_slide(dir);
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("missing tiles") != std::string::npos);
        CHECK(msg.find("L0_r1_c2.png") != std::string::npos);
    }
}

TEST_CASE("open_slide rejects inconsistent manifests") {
    auto dir = temp_dir("badmanifest");
    CHECK_THROWS(open_slide(dir / "nonexistent"));

    SlidePackage slide = make_package(dir, 700, 500, 256, 1);
    // Corrupt the declared level-0 width.
    slide.width = 701;
    write_manifest(slide);
    CHECK_THROWS_WITH_AS(open_slide(dir), doctest::Contains("manifest mismatch"),
                         std::runtime_error);
}

TEST_CASE("manifest preserves label and stain record") {
    auto dir = temp_dir("label");
    SlidePackage slide = make_package(dir, 300, 300, 256, 1);
    slide.label = "4+3";
    StainRecord rec;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rec.D(r, c) = 0.1 * r - 0.2 * c + 0.5;
    rec.lambda = 2.5;
    rec.prior_id = "ruifrok-johnston-he-dab";
    slide.stain_record = rec;
    write_manifest(slide);

    SlidePackage back = open_slide(dir);
    REQUIRE(back.label.has_value());
    CHECK(*back.label == "4+3");
    REQUIRE(back.stain_record.has_value());
    CHECK(back.stain_record->lambda == doctest::Approx(2.5));
    CHECK((back.stain_record->D - rec.D).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mask round-trip preserves every label") {
    auto dir = temp_dir("mask");
    TissueMask mask;
    mask.level = 2;
    mask.width = 40;
    mask.height = 30;
    mask.labels.assign(1200, 0);
    Rng rng(3);
    std::map<int, int> hist;
    for (auto& l : mask.labels) {
        l = static_cast<std::uint8_t>(rng.below(4));
        hist[l]++;
    }
    write_mask(mask, dir / "m.png");
    TissueMask back = read_mask(dir / "m.png", 2);
    REQUIRE(back.width == 40);
    REQUIRE(back.height == 30);
    CHECK(back.labels == mask.labels);
    std::map<int, int> hist2;
    for (auto l : back.labels) hist2[l]++;
    CHECK(hist2 == hist);

    // All-zero mask round-trips too.
    TissueMask zero = mask;
    std::fill(zero.labels.begin(), zero.labels.end(), 0);
    write_mask(zero, dir / "z.png");
    CHECK(read_mask(dir / "z.png", 2).labels == zero.labels);
}

TEST_CASE("patch sampling is deterministic and center-in-tumor") {
    auto dir = temp_dir("patches");
    SlidePackage slide = make_package(dir, 512, 512, 256, 2, 0.25);
    // Mask at level 1 (downsample 2): left half tumor.
    TissueMask mask;
    mask.level = 1;
    mask.width = 256;
    mask.height = 256;
    mask.labels.assign(256 * 256, 0);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 128; ++x) mask.at(x, y) = 1;

    auto a = sample_patch_origins(slide, mask, 200, 32, 0, 42);
    auto b = sample_patch_origins(slide, mask, 200, 32, 0, 42);
    CHECK(a == b);
    auto c = sample_patch_origins(slide, mask, 200, 32, 0, 43);
    CHECK(a != c);

    REQUIRE(a.size() == 200);
    for (auto [x, y] : a) {
        REQUIRE(x >= 0);
        REQUIRE(y >= 0);
        REQUIRE(x + 32 <= 512);
        REQUIRE(y + 32 <= 512);
        // Center maps into the tumor half of the mask.
        int cx = (x + 16) / 2, cy = (y + 16) / 2;
        REQUIRE(mask.at(cx, cy) == 1);
    }

    // Single tumor pixel: every center maps to it.
    TissueMask single = mask;
    std::fill(single.labels.begin(), single.labels.end(), 0);
    single.at(60, 60) = 1;
    auto s = sample_patch_origins(slide, single, 50, 32, 0, 7);
    REQUIRE(s.size() == 50);
    for (auto [x, y] : s) {
        CHECK((x + 16) / 2 == 60);
        CHECK((y + 16) / 2 == 60);
    }

    // No tumor pixels at all -> error.
    TissueMask empty = mask;
    std::fill(empty.labels.begin(), empty.labels.end(), 0);
    CHECK_THROWS_WITH_AS(sample_patch_origins(slide, empty, 5, 32, 0, 1),
                         doctest::Contains("no tumor region"), std::runtime_error);

    // Patch payloads match read_region.
    auto patches = sample_patches(slide, mask, 5, 32, 0, 42);
    REQUIRE(patches.size() == 5);
    for (const auto& p : patches) {
        RgbImage ref = read_region(slide, 0, p.x, p.y, 32, 32);
        CHECK(p.rgb.pixels == ref.pixels);
    }
}

TEST_CASE("write_overlay draws exact rectangle contours") {
    auto dir = temp_dir("overlay");
    SlidePackage slide = make_package(dir, 300, 200, 256, 1);

    // No regions: output equals the plain render.
    write_overlay(slide, 0, {}, dir / "plain.png");
    RgbImage plain = read_png_rgb(dir / "plain.png");
    RgbImage level = read_region(slide, 0, 0, 0, 300, 200);
    CHECK(plain.pixels == level.pixels);

    // One rectangle: its 2-pixel-wide inner boundary recolored, nothing else.
    OverlayRegion region;
    region.r = 0;
    region.g = 255;
    region.b = 0;
    for (int y = 50; y < 90; ++y)
        for (int x = 100; x < 160; ++x) region.pixels.emplace_back(x, y);
    write_overlay(slide, 0, {region}, dir / "rect.png");
    RgbImage over = read_png_rgb(dir / "rect.png");
    for (int y = 0; y < 200; ++y) {
        for (int x = 0; x < 300; ++x) {
            bool inside = x >= 100 && x < 160 && y >= 50 && y < 90;
            bool contour = inside && (x < 102 || x >= 158 || y < 52 || y >= 88);
            if (contour) {
                REQUIRE(over.at(x, y, 0) == 0);
                REQUIRE(over.at(x, y, 1) == 255);
                REQUIRE(over.at(x, y, 2) == 0);
            } else {
                REQUIRE(over.at(x, y, 0) == level.at(x, y, 0));
                REQUIRE(over.at(x, y, 1) == level.at(x, y, 1));
                REQUIRE(over.at(x, y, 2) == level.at(x, y, 2));
            }
        }
    }

    OverlayRegion oob;
    oob.pixels.emplace_back(300, 0);
    CHECK_THROWS_AS(write_overlay(slide, 0, {oob}, dir / "bad.png"),
                    std::out_of_range);
}
