#include "prograde/slide.hpp"
#include "prograde/png_io.hpp"
#include "prograde/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace prograde {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;

int tiles_across(int extent, int tile_size) {
    return (extent + tile_size - 1) / tile_size;
}
} // namespace

const LevelInfo& SlidePackage::level_info(int level) const {
    for (const auto& l : levels) {
        if (l.level == level) return l;
    }
    throw std::out_of_range("slide: no such level " + std::to_string(level));
}

std::filesystem::path tile_path(const SlidePackage& slide, int level, int row,
                                int col) {
    return slide.root / ("L" + std::to_string(level) + "_r" + std::to_string(row) +
                         "_c" + std::to_string(col) + ".png");
}

void write_manifest(const SlidePackage& slide) {
    json m;
    m["format_version"] = kFormatVersion;
    m["width"] = slide.width;
    m["height"] = slide.height;
    m["mpp"] = slide.mpp;
    m["tile_size"] = slide.tile_size;
    m["levels"] = json::array();
    for (const auto& l : slide.levels) {
        m["levels"].push_back({{"level", l.level},
                               {"width", l.width},
                               {"height", l.height},
                               {"downsample", l.downsample}});
    }
    if (slide.label) m["label"] = *slide.label;
    if (slide.stain_record) {
        json sr;
        sr["prior_id"] = slide.stain_record->prior_id;
        sr["lambda"] = slide.stain_record->lambda;
        sr["d_row_major"] = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) sr["d_row_major"].push_back(slide.stain_record->D(r, c));
        m["stain_matrix"] = sr;
    }
    std::ofstream out(slide.root / "manifest.json");
    if (!out) throw std::runtime_error("slide: cannot write manifest in " +
                                       slide.root.string());
    out << m.dump(2) << "\n";
}

SlidePackage open_slide(const std::filesystem::path& path) {
    std::ifstream in(path / "manifest.json");
    if (!in) throw std::runtime_error("invalid package: missing manifest.json in " +
                                      path.string());
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid package: corrupt manifest: " +
                                 std::string(e.what()));
    }

    SlidePackage slide;
    slide.root = path;
    try {
        slide.width = m.at("width").get<int>();
        slide.height = m.at("height").get<int>();
        slide.mpp = m.at("mpp").get<double>();
        slide.tile_size = m.at("tile_size").get<int>();
        for (const auto& l : m.at("levels")) {
            LevelInfo info;
            info.level = l.at("level").get<int>();
            info.width = l.at("width").get<int>();
            info.height = l.at("height").get<int>();
            info.downsample = l.at("downsample").get<int>();
            slide.levels.push_back(info);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid package: manifest field error: " +
                                 std::string(e.what()));
    }
    if (m.contains("label")) slide.label = m["label"].get<std::string>();
    if (m.contains("stain_matrix")) {
        const auto& sr = m["stain_matrix"];
        StainRecord rec;
        rec.prior_id = sr.at("prior_id").get<std::string>();
        rec.lambda = sr.at("lambda").get<double>();
        const auto& d = sr.at("d_row_major");
        if (d.size() != 9) throw std::runtime_error("invalid package: stain matrix size");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rec.D(r, c) = d[3 * r + c].get<double>();
        slide.stain_record = rec;
    }

    // Validate geometry and tile presence.
    if (slide.levels.empty() || slide.levels.front().level != 0 ||
        slide.levels.front().width != slide.width ||
        slide.levels.front().height != slide.height) {
        throw std::runtime_error("manifest mismatch: level 0 geometry");
    }
    for (const auto& l : slide.levels) {
        if (l.downsample < 1 || (l.downsample & (l.downsample - 1)) != 0) {
            throw std::runtime_error("manifest mismatch: downsample not a power of 2");
        }
        int expect_w = (slide.width + l.downsample - 1) / l.downsample;
        int expect_h = (slide.height + l.downsample - 1) / l.downsample;
        if (l.width != expect_w || l.height != expect_h) {
            throw std::runtime_error("manifest mismatch: level " +
                                     std::to_string(l.level) + " dimensions");
        }
    }
    std::string missing;
    for (const auto& l : slide.levels) {
        int rows = tiles_across(l.height, slide.tile_size);
        int cols = tiles_across(l.width, slide.tile_size);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                auto p = tile_path(slide, l.level, r, c);
                if (!std::filesystem::exists(p)) {
                    missing += " " + p.filename().string();
                }
            }
        }
    }
    if (!missing.empty()) {
        throw std::runtime_error("invalid package: missing tiles:" + missing);
    }
    return slide;
}

RgbImage read_region(const SlidePackage& slide, int level, int x, int y, int w,
                     int h) {
    const LevelInfo& info = slide.level_info(level);
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > info.width ||
        y + h > info.height) {
        throw std::out_of_range("read_region: out of bounds");
    }
    RgbImage out(w, h);
    const int ts = slide.tile_size;
    int row0 = y / ts, row1 = (y + h - 1) / ts;
    int col0 = x / ts, col1 = (x + w - 1) / ts;
    for (int row = row0; row <= row1; ++row) {
        for (int col = col0; col <= col1; ++col) {
            RgbImage tile = read_png_rgb(tile_path(slide, level, row, col));
            int tx0 = std::max(x, col * ts);
            int ty0 = std::max(y, row * ts);
            int tx1 = std::min(x + w, col * ts + tile.width);
            int ty1 = std::min(y + h, row * ts + tile.height);
            for (int py = ty0; py < ty1; ++py) {
                for (int px = tx0; px < tx1; ++px) {
                    for (int c = 0; c < 3; ++c) {
                        out.at(px - x, py - y, c) =
                            tile.at(px - col * ts, py - row * ts, c);
                    }
                }
            }
        }
    }
    return out;
}

std::vector<std::pair<int, int>> sample_patch_origins(const SlidePackage& slide,
                                                      const TissueMask& mask,
                                                      int n, int size, int level,
                                                      std::uint64_t seed) {
    const LevelInfo& info = slide.level_info(level);
    if (size > info.width || size > info.height) {
        throw std::invalid_argument("sample_patches: patch larger than level");
    }
    const LevelInfo& mask_level = slide.level_info(mask.level);
    // Scale from the sampling level to the mask level.
    const double scale =
        static_cast<double>(mask_level.downsample) / info.downsample;

    std::vector<std::pair<int, int>> tumor_px;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) == 1) tumor_px.emplace_back(x, y);
        }
    }
    if (tumor_px.empty()) throw std::runtime_error("no tumor region");

    Rng rng(seed);
    std::vector<std::pair<int, int>> origins;
    origins.reserve(n);
    int guard = 0;
    while (static_cast<int>(origins.size()) < n) {
        if (++guard > 1000 * n + 1000) {
            throw std::runtime_error("sample_patches: cannot place patches inside bounds");
        }
        auto [mx, my] = tumor_px[rng.below(tumor_px.size())];
        // Jitter inside the chosen mask pixel's footprint at the target level.
        int cx = static_cast<int>((mx + rng.uniform()) * scale);
        int cy = static_cast<int>((my + rng.uniform()) * scale);
        int ox = cx - size / 2;
        int oy = cy - size / 2;
        if (ox < 0 || oy < 0 || ox + size > info.width || oy + size > info.height) {
            continue;
        }
        // Keep only origins whose center maps back to a tumor mask pixel.
        int back_x = static_cast<int>((ox + size / 2) / scale);
        int back_y = static_cast<int>((oy + size / 2) / scale);
        if (back_x >= mask.width || back_y >= mask.height ||
            mask.at(back_x, back_y) != 1) {
            continue;
        }
        origins.emplace_back(ox, oy);
    }
    return origins;
}

std::vector<Patch> sample_patches(const SlidePackage& slide, const TissueMask& mask,
                                  int n, int size, int level, std::uint64_t seed) {
    auto origins = sample_patch_origins(slide, mask, n, size, level, seed);
    std::vector<Patch> patches;
    patches.reserve(origins.size());
    for (auto [x, y] : origins) {
        Patch p;
        p.slide_id = slide.id();
        p.level = level;
        p.x = x;
        p.y = y;
        p.size = size;
        p.rgb = read_region(slide, level, x, y, size, size);
        patches.push_back(std::move(p));
    }
    return patches;
}

void write_mask(const TissueMask& mask, const std::filesystem::path& path) {
    Plane plane(mask.width, mask.height);
    plane.values = mask.labels;
    write_png_gray(path, plane);
}

TissueMask read_mask(const std::filesystem::path& path, int level) {
    Plane plane = read_png_gray(path);
    TissueMask mask;
    mask.level = level;
    mask.width = plane.width;
    mask.height = plane.height;
    mask.labels = std::move(plane.values);
    return mask;
}

void write_overlay(const SlidePackage& slide, int level,
                   const std::vector<OverlayRegion>& regions,
                   const std::filesystem::path& path) {
    const LevelInfo& info = slide.level_info(level);
    RgbImage canvas = read_region(slide, level, 0, 0, info.width, info.height);

    for (const auto& region : regions) {
        std::set<std::pair<int, int>> in_region(region.pixels.begin(),
                                                region.pixels.end());
        for (auto [x, y] : region.pixels) {
            if (x < 0 || y < 0 || x >= info.width || y >= info.height) {
                throw std::out_of_range("write_overlay: region outside level bounds");
            }
        }
        auto outside = [&](int x, int y) {
            return !in_region.count({x, y});
        };
        // Ring 1: region pixels with a 4-neighbor outside the region.
        std::set<std::pair<int, int>> ring1;
        for (auto [x, y] : region.pixels) {
            if (outside(x - 1, y) || outside(x + 1, y) || outside(x, y - 1) ||
                outside(x, y + 1)) {
                ring1.insert({x, y});
            }
        }
        // Ring 2: region pixels adjacent to ring 1 (2-pixel-wide contour).
        std::set<std::pair<int, int>> contour = ring1;
        for (auto [x, y] : region.pixels) {
            if (ring1.count({x, y})) continue;
            if (ring1.count({x - 1, y}) || ring1.count({x + 1, y}) ||
                ring1.count({x, y - 1}) || ring1.count({x, y + 1})) {
                contour.insert({x, y});
            }
        }
        for (auto [x, y] : contour) {
            canvas.at(x, y, 0) = region.r;
            canvas.at(x, y, 1) = region.g;
            canvas.at(x, y, 2) = region.b;
        }
    }
    write_png_rgb(path, canvas);
}

} // namespace prograde
