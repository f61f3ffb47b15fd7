#ifndef PROGRADE_SLIDE_HPP
#define PROGRADE_SLIDE_HPP

#include "prograde/image.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace prograde {

struct LevelInfo {
    int level = 0;
    int width = 0;
    int height = 0;
    int downsample = 1;  // power of 2 relative to level 0
};

// Per-slide optimized decomposition matrix persisted with the package.
struct StainRecord {
    Eigen::Matrix3d D;
    double lambda = 1.0;
    std::string prior_id;
};

// Tiled multi-level slide stored as a directory: manifest.json plus
// lossless PNG tiles named L{level}_r{row}_c{col}.png.
struct SlidePackage {
    std::filesystem::path root;
    int width = 0;   // level-0 pixels
    int height = 0;
    double mpp = 0.0;  // microns per pixel at level 0
    int tile_size = 512;
    std::vector<LevelInfo> levels;
    std::optional<std::string> label;  // Gleason string, e.g. "3+4"
    std::optional<StainRecord> stain_record;

    const LevelInfo& level_info(int level) const;
    const LevelInfo& lowest_level() const { return levels.back(); }
    std::string id() const { return root.filename().string(); }
};

// Label raster aligned with one pyramid level. 0 = background, 1 = tumor,
// further clusters >= 2.
struct TissueMask {
    int level = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    std::uint8_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

struct Patch {
    std::string slide_id;
    int level = 0;
    int x = 0;  // origin in level pixels
    int y = 0;
    int size = 0;
    RgbImage rgb;
};

// Validates the manifest and the presence of every referenced tile.
SlidePackage open_slide(const std::filesystem::path& path);

// Writes manifest.json for a package whose tiles are already (or about to
// be) in place.
void write_manifest(const SlidePackage& slide);

std::filesystem::path tile_path(const SlidePackage& slide, int level, int row,
                                int col);

// Pixel-exact mosaic of the underlying tiles; throws on out-of-bounds.
RgbImage read_region(const SlidePackage& slide, int level, int x, int y, int w,
                     int h);

// Seeded patch-origin sampling: n origins whose patch center maps to a
// tumor-labeled (label 1) mask pixel. Sampling is with replacement.
std::vector<std::pair<int, int>> sample_patch_origins(const SlidePackage& slide,
                                                      const TissueMask& mask,
                                                      int n, int size, int level,
                                                      std::uint64_t seed);

// Origins plus RGB payload read from the slide.
std::vector<Patch> sample_patches(const SlidePackage& slide, const TissueMask& mask,
                                  int n, int size, int level, std::uint64_t seed);

// Masks persist as 8-bit greyscale PNGs with label values as pixel values.
void write_mask(const TissueMask& mask, const std::filesystem::path& path);
TissueMask read_mask(const std::filesystem::path& path, int level);

struct OverlayRegion {
    std::vector<std::pair<int, int>> pixels;  // level coordinates
    std::uint8_t r = 0, g = 0, b = 0;
};

// Renders the level with 2-pixel-wide contour outlines of each region.
void write_overlay(const SlidePackage& slide, int level,
                   const std::vector<OverlayRegion>& regions,
                   const std::filesystem::path& path);

} // namespace prograde

#endif
