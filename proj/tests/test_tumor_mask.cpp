#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "prograde/png_io.hpp"
#include "prograde/slide.hpp"
#include "prograde/synth.hpp"
#include "prograde/tumor_mask.hpp"

#include <filesystem>

using namespace prograde;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("prograde_mask_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double dice(const TissueMask& mask, const TissueMask& gt) {
    REQUIRE(mask.labels.size() == gt.labels.size());
    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        bool ma = mask.labels[i] == 1, mb = gt.labels[i] == 1;
        inter += ma && mb;
        a += ma;
        b += mb;
    }
    return a + b ? 2.0 * inter / (a + b) : 1.0;
}

SlidePackage uniform_slide(const fs::path& dir, std::uint8_t r, std::uint8_t g,
                           std::uint8_t b) {
    SlidePackage slide;
    slide.root = dir;
    slide.width = slide.height = 128;
    slide.mpp = 0.5;
    slide.tile_size = 512;
    slide.levels.push_back({0, 128, 128, 1});
    fs::create_directories(dir);
    RgbImage img(128, 128);
    for (int y = 0; y < 128; ++y) {
        for (int x = 0; x < 128; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    }
    write_png_rgb(tile_path(slide, 0, 0, 0), img);
    write_manifest(slide);
    return slide;
}

} // namespace

TEST_CASE("k=3 tumor mask reaches Dice >= 0.8 on synthetic slides") {
    for (std::uint64_t seed : {101ULL, 202ULL}) {
        auto dir = temp_dir("dice" + std::to_string(seed));
        SynthSpec spec;
        spec.cls = seed % 2 ? SynthClass::Grade3 : SynthClass::Grade4;
        spec.grade3_fraction = seed % 2 ? 1.0 : 0.0;
        spec.seed = seed;
        auto [slide, gt] = synth_slide(spec, dir);
        TissueMask mask = extract_tumor_mask(slide, 3, 5);
        CHECK(dice(mask, gt.tumor_mask) >= 0.80);

        // Partition: all labels in [0, 3).
        for (auto l : mask.labels) REQUIRE(l < 3);
    }
}

TEST_CASE("pen marker slides: k=4 isolates the marker, Dice >= 0.75") {
    auto dir = temp_dir("marker");
    SynthSpec spec;
    spec.cls = SynthClass::Grade3;
    spec.pen_marker = true;
    spec.seed = 55;
    auto [slide, gt] = synth_slide(spec, dir);
    TissueMask mask = extract_tumor_mask(slide, 4, 5);
    CHECK(dice(mask, gt.tumor_mask) >= 0.75);

    // The marker band (level-0 rows 24..44 -> lowest-level rows 7..10 with
    // a safety inset) should carry a label that is neither background (0)
    // nor tumor (1), i.e. its own cluster.
    int marker_own = 0, marker_total = 0;
    for (int y = 7; y <= 10; ++y) {
        for (int x = 30; x < 220; ++x) {
            ++marker_total;
            if (mask.at(x, y) >= 2) ++marker_own;
        }
    }
    CHECK(static_cast<double>(marker_own) / marker_total > 0.95);
}

TEST_CASE("mask extraction is deterministic for a fixed seed") {
    auto dir = temp_dir("det");
    SynthSpec spec;
    spec.seed = 9;
    auto [slide, gt] = synth_slide(spec, dir);
    TissueMask a = extract_tumor_mask(slide, 3, 77);
    TissueMask b = extract_tumor_mask(slide, 3, 77);
    CHECK(a.labels == b.labels);
}

TEST_CASE("uniform slide fails with the kmeans degenerate-input error") {
    auto dir = temp_dir("uniform");
    SlidePackage slide = uniform_slide(dir, 180, 120, 200);
    CHECK_THROWS_WITH_AS(extract_tumor_mask(slide, 3, 1),
                         doctest::Contains("insufficient distinct points"),
                         std::invalid_argument);
}

TEST_CASE("k outside {3,4} is rejected") {
    auto dir = temp_dir("badk");
    SlidePackage slide = uniform_slide(dir, 1, 2, 3);
    CHECK_THROWS_AS(extract_tumor_mask(slide, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(extract_tumor_mask(slide, 5, 1), std::invalid_argument);
}
