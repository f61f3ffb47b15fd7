#include "prograde/synth.hpp"

#include "prograde/colorspace.hpp"
#include "prograde/png_io.hpp"
#include "prograde/rng.hpp"
#include "prograde/stain.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace prograde {

namespace {

using nlohmann::json;

enum Material : std::uint8_t {
    kBackground = 0,
    kStroma,
    kCytoplasm,
    kLumen,
    kNucleus,
    kNucleolus,
    kMaterialCount
};

struct MaterialDensity {
    double h, e;
};

// Stain densities (hematoxylin, eosin) per material. Chosen so that the
// hematoxylin plane thresholds nuclei at >= 128 after the affine rescale,
// lumens satisfy RGB > 200, and no channel drops below ~8 intensity levels
// (which would make the quantized optical density too coarse to stay on
// the stain plane).
constexpr MaterialDensity kDensity[kMaterialCount] = {
    {0.0, 0.0},    // background
    {0.05, 3.2},   // stroma
    {0.55, 0.45},  // cytoplasm
    {0.02, 0.02},  // lumen
    {2.9, 0.2},    // nucleus
    {4.5, 0.2},    // nucleolus
};

// Texture noise: a small set of density offsets instead of continuous
// noise, so every rendered color comes from a fixed snapped palette.
constexpr int kVariants = 5;
constexpr double kVariantDh[kVariants] = {0.0, 0.02, -0.02, 0.01, -0.01};
constexpr double kVariantDe[kVariants] = {0.0, 0.01, -0.01, -0.02, 0.02};

struct Rgb8 {
    std::uint8_t r, g, b;
};

// Nearest 8-bit color to the target stain mixture whose optical density
// stays (to ~1e-4) in span(u, v). 8-bit quantization alone would leave an
// off-plane residual ~1e-2, visible as a spurious third-stain signal.
Rgb8 snap_to_stain_plane(double hd, double ed, const Eigen::Vector3d& u,
                         const Eigen::Vector3d& v, const Eigen::Vector3d& n) {
    Eigen::Vector3d target = hd * u + ed * v;
    int base[3];
    for (int c = 0; c < 3; ++c) base[c] = od_to_channel(target[c]);
    double best_cost = 1e18, best_dev = 1e18;
    int best[3] = {base[0], base[1], base[2]};
    for (int er = -4; er <= 4; ++er) {
        for (int eg = -4; eg <= 4; ++eg) {
            for (int eb = -4; eb <= 4; ++eb) {
                int I[3] = {base[0] + er, base[1] + eg, base[2] + eb};
                if (I[0] < 0 || I[0] > 255 || I[1] < 0 || I[1] > 255 ||
                    I[2] < 0 || I[2] > 255) {
                    continue;
                }
                Eigen::Vector3d od(channel_to_od(static_cast<std::uint8_t>(I[0])),
                                   channel_to_od(static_cast<std::uint8_t>(I[1])),
                                   channel_to_od(static_cast<std::uint8_t>(I[2])));
                double cost = std::abs(n.dot(od));
                double dev = (od - target).squaredNorm();
                if (cost < best_cost - 1e-12 ||
                    (cost < best_cost + 1e-12 && dev < best_dev)) {
                    best_cost = cost;
                    best_dev = dev;
                    best[0] = I[0];
                    best[1] = I[1];
                    best[2] = I[2];
                }
            }
        }
    }
    return {static_cast<std::uint8_t>(best[0]), static_cast<std::uint8_t>(best[1]),
            static_cast<std::uint8_t>(best[2])};
}

struct Canvas {
    int w = 0, h = 0;
    std::vector<std::uint8_t> mat;
    std::vector<std::uint8_t> tumor;   // 1 = glandular tumor tissue
    std::vector<std::uint8_t> grade4;  // 1 = grade-4 pattern (subset of tumor)
    std::vector<std::uint8_t> marker;  // pen marker overlay

    Canvas(int width, int height)
        : w(width), h(height), mat(static_cast<std::size_t>(width) * height,
                                   kBackground),
          tumor(mat.size(), 0), grade4(mat.size(), 0), marker(mat.size(), 0) {}

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * w + x;
    }
};

void fill_rect(Canvas& c, int x0, int y0, int x1, int y1, Material m,
               int tumor, int grade4) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, c.w);
    y1 = std::min(y1, c.h);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            auto i = c.idx(x, y);
            c.mat[i] = m;
            if (tumor >= 0) c.tumor[i] = static_cast<std::uint8_t>(tumor);
            if (grade4 >= 0) c.grade4[i] = static_cast<std::uint8_t>(grade4);
        }
    }
}

void fill_disk(Canvas& c, double cx, double cy, double r, Material m,
               int tumor, int grade4) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + r)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + r)));
    double r2 = r * r;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy > r2) continue;
            auto i = c.idx(x, y);
            c.mat[i] = m;
            if (tumor >= 0) c.tumor[i] = static_cast<std::uint8_t>(tumor);
            if (grade4 >= 0) c.grade4[i] = static_cast<std::uint8_t>(grade4);
        }
    }
}

void fill_ellipse(Canvas& c, double cx, double cy, double a, double b,
                  double theta, Material m) {
    double r = std::max(a, b);
    int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + r)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + r)));
    double ct = std::cos(theta), st = std::sin(theta);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            double px = dx * ct + dy * st;
            double py = -dx * st + dy * ct;
            if ((px * px) / (a * a) + (py * py) / (b * b) > 1.0) continue;
            c.mat[c.idx(x, y)] = m;
        }
    }
}

struct Layout {
    int margin = 64;
    int pitch = 170;
    double gland_r = 46.0;
    double lumen_r = 13.0;
    double ring_r = 36.0;
    int ring_n = 11;
    double crib_r = 95.0;
};

struct GlandCenters {
    std::vector<std::pair<double, double>> grade3;
    int sheet_x0 = 0, sheet_x1 = 0;  // grade-4 sheet strip, empty if x0 >= x1
};

// Splits the glandular zone into a grade-3 gland grid (left) and a grade-4
// fused sheet strip (right) so the grade-3 share of glandular area is as
// close as possible to spec.grade3_fraction.
GlandCenters plan_layout(const SynthSpec& spec, const Layout& L) {
    const int w = spec.width, h = spec.height, m = L.margin;
    const int zone_w = w - 2 * m;
    auto cols_for = [&](int w3) {
        int n = 0;
        for (int cx = m + 90; cx + 90 <= m + w3; cx += L.pitch) ++n;
        return n;
    };
    int rows = 0;
    for (int cy = m + 90; cy + 90 <= h - m; cy += L.pitch) ++rows;
    const double gland_area =
        M_PI * (L.gland_r * L.gland_r - L.lumen_r * L.lumen_r);
    const double sheet_h = std::max(0, h - 2 * m - 20);

    int best_w3 = zone_w;
    double best_err = 1e18;
    for (int w3 = 0; w3 <= zone_w; w3 += 2) {
        double a3 = cols_for(w3) * rows * gland_area;
        int strip = zone_w - w3;
        double a4 = strip > 20 ? (strip - 20) * sheet_h : 0.0;
        if (a3 + a4 <= 0) continue;
        double err = std::abs(a3 / (a3 + a4) - spec.grade3_fraction);
        if (err < best_err) {
            best_err = err;
            best_w3 = w3;
        }
    }
    if (spec.grade3_fraction >= 1.0) best_w3 = zone_w;
    if (spec.grade3_fraction <= 0.0) best_w3 = 0;

    GlandCenters out;
    for (int cx = m + 90; cx + 90 <= m + best_w3; cx += L.pitch) {
        for (int cy = m + 90; cy + 90 <= h - m; cy += L.pitch) {
            out.grade3.emplace_back(cx, cy);
        }
    }
    int strip = zone_w - best_w3;
    if (strip > 20) {
        out.sheet_x0 = m + best_w3 + 10;
        out.sheet_x1 = w - m - 10;
    }
    return out;
}

void paint_nucleus(Canvas& c, GroundTruth& gt, double cx, double cy, double a,
                   double b, double theta, bool nucleolus) {
    fill_ellipse(c, cx, cy, a, b, theta, kNucleus);
    if (nucleolus) fill_ellipse(c, cx, cy, 1.8, 1.8, 0.0, kNucleolus);
    gt.nuclei.emplace_back(cx, cy);
}

void paint_grade3_gland(Canvas& c, GroundTruth& gt, const Layout& L, double cx,
                        double cy, Rng& rng) {
    fill_disk(c, cx, cy, L.gland_r, kCytoplasm, 1, 0);
    fill_disk(c, cx, cy, L.lumen_r, kLumen, 0, 0);
    gt.lumens.push_back({cx, cy, L.lumen_r});
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < L.ring_n; ++i) {
        double ang = phase + 2.0 * M_PI * i / L.ring_n;
        double nx = cx + L.ring_r * std::cos(ang);
        double ny = cy + L.ring_r * std::sin(ang);
        paint_nucleus(c, gt, nx, ny, 4.2, 3.2, ang + M_PI / 2 + rng.uniform(-0.3, 0.3),
                      false);
    }
}

void paint_cribriform_gland(Canvas& c, GroundTruth& gt, const Layout& L,
                            double cx, double cy, Rng& rng) {
    fill_disk(c, cx, cy, L.crib_r, kCytoplasm, 1, 0);
    gt.cribriform_regions.push_back({cx, cy, L.crib_r});
    // Several round lumens, each ringed tightly by nuclei: the tight rings
    // give the gland a markedly higher clustering coefficient than the
    // wide single-lumen rings of grade-3 glands.
    const double lumen_r = 14.0, lumen_dist = 45.0, nring_r = 24.0;
    std::vector<std::pair<double, double>> lumen_centers;
    for (int i = 0; i < 4; ++i) {
        double ang = M_PI / 4 + i * M_PI / 2;
        double lx = cx + lumen_dist * std::cos(ang) + rng.uniform(-2.0, 2.0);
        double ly = cy + lumen_dist * std::sin(ang) + rng.uniform(-2.0, 2.0);
        lumen_centers.emplace_back(lx, ly);
        fill_disk(c, lx, ly, lumen_r, kLumen, 0, 0);
        gt.lumens.push_back({lx, ly, lumen_r});
    }
    for (auto [lx, ly] : lumen_centers) {
        double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (int i = 0; i < 8; ++i) {
            double ang = phase + 2.0 * M_PI * i / 8;
            paint_nucleus(c, gt, lx + nring_r * std::cos(ang),
                          ly + nring_r * std::sin(ang), 4.2, 3.2,
                          ang + M_PI / 2, rng.uniform() < 0.5);
        }
    }
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < 18; ++i) {
        double ang = phase + 2.0 * M_PI * i / 18;
        paint_nucleus(c, gt, cx + 84.0 * std::cos(ang), cy + 84.0 * std::sin(ang),
                      4.2, 3.2, ang + M_PI / 2, false);
    }
}

void paint_grade4_sheet(Canvas& c, GroundTruth& gt, int x0, int x1, int y0,
                        int y1, Rng& rng) {
    fill_rect(c, x0, y0, x1, y1, kCytoplasm, 1, 1);
    // Sparse small lumens.
    std::vector<std::pair<double, double>> lumen_centers;
    for (int ly = y0 + 90; ly + 90 < y1; ly += 220) {
        for (int lx = x0 + 90; lx + 90 < x1; lx += 220) {
            double jx = lx + rng.uniform(-10.0, 10.0);
            double jy = ly + rng.uniform(-10.0, 10.0);
            fill_disk(c, jx, jy, 7.0, kLumen, 0, 0);
            gt.lumens.push_back({jx, jy, 7.0});
            lumen_centers.emplace_back(jx, jy);
        }
    }
    // Fused sheet: densely packed nuclei with no ring structure.
    for (int ny = y0 + 9; ny + 9 < y1; ny += 18) {
        for (int nx = x0 + 9; nx + 9 < x1; nx += 18) {
            double jx = nx + rng.uniform(-2.0, 2.0);
            double jy = ny + rng.uniform(-2.0, 2.0);
            bool on_lumen = false;
            for (auto [lx, ly] : lumen_centers) {
                if (std::hypot(jx - lx, jy - ly) < 7.0 + 6.5) on_lumen = true;
            }
            if (on_lumen) continue;
            paint_nucleus(c, gt, jx, jy, 5.0, 4.0, rng.uniform(0.0, M_PI),
                          rng.uniform() < 0.4);
        }
    }
}

// 2x box downsample with rounding.
RgbImage downsample2(const RgbImage& in) {
    RgbImage out((in.width + 1) / 2, (in.height + 1) / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                int sum = 0, count = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        int sx = 2 * x + dx, sy = 2 * y + dy;
                        if (sx >= in.width || sy >= in.height) continue;
                        sum += in.at(sx, sy, ch);
                        ++count;
                    }
                }
                out.at(x, y, ch) = static_cast<std::uint8_t>((sum + count / 2) / count);
            }
        }
    }
    return out;
}

void write_level_tiles(const SlidePackage& slide, int level, const RgbImage& img) {
    const int ts = slide.tile_size;
    int rows = (img.height + ts - 1) / ts;
    int cols = (img.width + ts - 1) / ts;
    for (int r = 0; r < rows; ++r) {
        for (int cidx = 0; cidx < cols; ++cidx) {
            int tw = std::min(ts, img.width - cidx * ts);
            int th = std::min(ts, img.height - r * ts);
            RgbImage tile(tw, th);
            for (int y = 0; y < th; ++y) {
                for (int x = 0; x < tw; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        tile.at(x, y, ch) = img.at(cidx * ts + x, r * ts + y, ch);
                    }
                }
            }
            write_png_rgb(tile_path(slide, level, r, cidx), tile);
        }
    }
}

std::string label_for(const SynthSpec& spec) {
    if (!spec.label.empty()) return spec.label;
    switch (spec.cls) {
        case SynthClass::Grade3: return "3+3";
        case SynthClass::Grade4: return "4+4";
        case SynthClass::Benign: return "benign";
    }
    return "3+3";
}

} // namespace

std::pair<SlidePackage, GroundTruth> synth_slide(const SynthSpec& spec,
                                                 const std::filesystem::path& out_dir) {
    if (spec.width < 384 || spec.height < 384) {
        throw std::invalid_argument("synth: slide size must be at least 384");
    }
    std::filesystem::create_directories(out_dir);

    Layout L;
    L.pitch = std::max(
        160, static_cast<int>(std::lround(170.0 / std::sqrt(std::max(0.25, spec.gland_density)))));
    Rng rng(spec.seed);
    Rng geometry_rng = rng.fork(1);
    Rng texture_rng = rng.fork(2);

    Canvas canvas(spec.width, spec.height);
    GroundTruth gt;
    gt.label = label_for(spec);

    const int m = L.margin;
    fill_rect(canvas, m, m, spec.width - m, spec.height - m, kStroma, 0, 0);

    std::vector<std::pair<double, double>> crib_centers;
    if (spec.cls != SynthClass::Benign) {
        SynthSpec eff = spec;
        if (spec.cls == SynthClass::Grade4) eff.grade3_fraction = 0.0;
        GlandCenters plan = plan_layout(eff, L);
        if (plan.sheet_x1 > plan.sheet_x0) {
            paint_grade4_sheet(canvas, gt, plan.sheet_x0, plan.sheet_x1, m + 10,
                               spec.height - m - 10, geometry_rng);
        }
        if (spec.cribriform) {
            crib_centers.emplace_back(
                spec.width * 0.35 + geometry_rng.uniform(-8.0, 8.0),
                spec.height * 0.42 + geometry_rng.uniform(-8.0, 8.0));
            crib_centers.emplace_back(
                spec.width * 0.66 + geometry_rng.uniform(-8.0, 8.0),
                spec.height * 0.60 + geometry_rng.uniform(-8.0, 8.0));
        }
        for (auto [cx, cy] : plan.grade3) {
            double jx = cx + geometry_rng.uniform(-6.0, 6.0);
            double jy = cy + geometry_rng.uniform(-6.0, 6.0);
            bool near_crib = false;
            for (auto [kx, ky] : crib_centers) {
                if (std::hypot(jx - kx, jy - ky) < L.crib_r + L.gland_r + 70.0) {
                    near_crib = true;
                }
            }
            if (near_crib) continue;
            paint_grade3_gland(canvas, gt, L, jx, jy, geometry_rng);
        }
        for (auto [cx, cy] : crib_centers) {
            paint_cribriform_gland(canvas, gt, L, cx, cy, geometry_rng);
        }
    }

    // Scattered stroma nuclei, kept clear of glandular structures so they
    // never join a gland's proximity graph (30 um = 60 px at mpp 0.5).
    for (int sy = m + 20; sy < spec.height - m - 20; sy += 96) {
        for (int sx = m + 20; sx < spec.width - m - 20; sx += 96) {
            double jx = sx + geometry_rng.uniform(-10.0, 10.0);
            double jy = sy + geometry_rng.uniform(-10.0, 10.0);
            double theta = geometry_rng.uniform(0.0, M_PI);
            bool clear = true;
            for (int dy = -76; dy <= 76 && clear; dy += 4) {
                for (int dx = -76; dx <= 76 && clear; dx += 4) {
                    int px = static_cast<int>(jx) + dx, py = static_cast<int>(jy) + dy;
                    if (px < 0 || py < 0 || px >= spec.width || py >= spec.height) {
                        continue;
                    }
                    auto mat = canvas.mat[canvas.idx(px, py)];
                    if (mat != kStroma && mat != kBackground) clear = false;
                }
            }
            if (!clear) continue;
            paint_nucleus(canvas, gt, jx, jy, 6.0, 2.8, theta, false);
        }
    }

    if (spec.pen_marker) {
        int y0 = 24, y1 = 44;
        int x0 = static_cast<int>(spec.width * 0.08);
        int x1 = static_cast<int>(spec.width * 0.92);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) canvas.marker[canvas.idx(x, y)] = 1;
        }
    }

    // Snapped palette per material/variant.
    StainModel model = default_stain_model();
    Eigen::Vector3d n = model.u.cross(model.v).normalized();
    Rgb8 palette[kMaterialCount][kVariants];
    for (int mat = 0; mat < kMaterialCount; ++mat) {
        for (int var = 0; var < kVariants; ++var) {
            double hd = std::max(0.0, kDensity[mat].h + (mat == kBackground ? 0.0 : kVariantDh[var]));
            double ed = std::max(0.0, kDensity[mat].e + (mat == kBackground ? 0.0 : kVariantDe[var]));
            palette[mat][var] = snap_to_stain_plane(hd, ed, model.u, model.v, n);
        }
    }

    RgbImage level0(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            auto i = canvas.idx(x, y);
            if (canvas.marker[i]) {
                int jr = static_cast<int>(texture_rng.below(5)) - 2;
                int jg = static_cast<int>(texture_rng.below(5)) - 2;
                int jb = static_cast<int>(texture_rng.below(5)) - 2;
                level0.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(40 + jr, 0, 255));
                level0.at(x, y, 1) = static_cast<std::uint8_t>(std::clamp(160 + jg, 0, 255));
                level0.at(x, y, 2) = static_cast<std::uint8_t>(std::clamp(60 + jb, 0, 255));
                continue;
            }
            const Rgb8& c = palette[canvas.mat[i]][texture_rng.below(kVariants)];
            level0.at(x, y, 0) = c.r;
            level0.at(x, y, 1) = c.g;
            level0.at(x, y, 2) = c.b;
        }
    }

    SlidePackage slide;
    slide.root = out_dir;
    slide.width = spec.width;
    slide.height = spec.height;
    slide.mpp = spec.mpp;
    slide.tile_size = 512;
    slide.label = gt.label;
    {
        int ds = 1;
        while (true) {
            LevelInfo info;
            info.level = static_cast<int>(slide.levels.size());
            info.downsample = ds;
            info.width = (spec.width + ds - 1) / ds;
            info.height = (spec.height + ds - 1) / ds;
            slide.levels.push_back(info);
            if (std::min(info.width, info.height) <= 256) break;
            ds *= 2;
        }
    }

    RgbImage current = level0;
    for (const auto& info : slide.levels) {
        while (current.width > info.width || current.height > info.height) {
            current = downsample2(current);
        }
        write_level_tiles(slide, info.level, current);
    }
    write_manifest(slide);

    // Ground-truth tumor mask at the lowest level: majority vote over each
    // pixel's level-0 footprint.
    const LevelInfo& low = slide.lowest_level();
    gt.tumor_mask.level = low.level;
    gt.tumor_mask.width = low.width;
    gt.tumor_mask.height = low.height;
    gt.tumor_mask.labels.assign(
        static_cast<std::size_t>(low.width) * low.height, 0);
    const int ds = low.downsample;
    for (int y = 0; y < low.height; ++y) {
        for (int x = 0; x < low.width; ++x) {
            int count = 0, total = 0;
            for (int dy = 0; dy < ds; ++dy) {
                for (int dx = 0; dx < ds; ++dx) {
                    int sx = x * ds + dx, sy = y * ds + dy;
                    if (sx >= spec.width || sy >= spec.height) continue;
                    ++total;
                    count += canvas.tumor[canvas.idx(sx, sy)];
                }
            }
            if (2 * count >= total) gt.tumor_mask.at(x, y) = 1;
        }
    }

    for (std::size_t i = 0; i < canvas.tumor.size(); ++i) {
        if (!canvas.tumor[i]) continue;
        if (canvas.grade4[i]) {
            gt.grade4_area += 1.0;
        } else {
            gt.grade3_area += 1.0;
        }
    }

    write_mask(gt.tumor_mask, out_dir / "gt_mask.png");
    json j;
    j["label"] = gt.label;
    j["mask_level"] = gt.tumor_mask.level;
    j["grade3_area"] = gt.grade3_area;
    j["grade4_area"] = gt.grade4_area;
    j["lumens"] = json::array();
    for (const auto& l : gt.lumens) j["lumens"].push_back({{"x", l.x}, {"y", l.y}, {"r", l.r}});
    j["nuclei"] = json::array();
    for (const auto& [nx, ny] : gt.nuclei) j["nuclei"].push_back({nx, ny});
    j["cribriform"] = json::array();
    for (const auto& r : gt.cribriform_regions) {
        j["cribriform"].push_back({{"x", r.x}, {"y", r.y}, {"r", r.r}});
    }
    std::ofstream out(out_dir / "ground_truth.json");
    if (!out) throw std::runtime_error("synth: cannot write ground truth");
    out << j.dump(2) << "\n";

    return {std::move(slide), std::move(gt)};
}

GroundTruth load_ground_truth(const std::filesystem::path& slide_dir) {
    std::ifstream in(slide_dir / "ground_truth.json");
    if (!in) throw std::runtime_error("synth: missing ground_truth.json in " +
                                      slide_dir.string());
    json j;
    in >> j;
    GroundTruth gt;
    gt.label = j.at("label").get<std::string>();
    gt.grade3_area = j.value("grade3_area", 0.0);
    gt.grade4_area = j.value("grade4_area", 0.0);
    for (const auto& l : j.at("lumens")) {
        gt.lumens.push_back({l.at("x").get<double>(), l.at("y").get<double>(),
                             l.at("r").get<double>()});
    }
    for (const auto& p : j.at("nuclei")) {
        gt.nuclei.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    for (const auto& r : j.at("cribriform")) {
        gt.cribriform_regions.push_back({r.at("x").get<double>(),
                                         r.at("y").get<double>(),
                                         r.at("r").get<double>()});
    }
    gt.tumor_mask = read_mask(slide_dir / "gt_mask.png", j.at("mask_level").get<int>());
    return gt;
}

std::vector<CorpusEntry> synth_corpus(int n_per_class,
                                      const std::filesystem::path& out_dir,
                                      std::uint64_t seed, int slide_size,
                                      int jobs) {
    if (n_per_class < 1) throw std::invalid_argument("synth: n_per_class must be >= 1");
    std::filesystem::create_directories(out_dir);
    Rng master(seed);
    std::vector<CorpusEntry> entries;
    std::vector<SynthSpec> specs;
    int index = 0;
    auto add = [&](SynthClass cls, double g3_fraction, const std::string& label,
                   const std::string& split) {
        SynthSpec spec;
        spec.cls = cls;
        spec.width = spec.height = slide_size;
        spec.grade3_fraction = g3_fraction;
        spec.label = label;
        spec.seed = master.fork(static_cast<std::uint64_t>(index)).next_u64();
        char name[64];
        std::snprintf(name, sizeof name, "s%03d_%s_%c%c%c", index, split.c_str(),
                      label[0], 'p', label[2]);
        specs.push_back(spec);
        entries.push_back({name, label, split});
        ++index;
    };
    for (int i = 0; i < n_per_class; ++i) add(SynthClass::Grade3, 1.0, "3+3", "train");
    for (int i = 0; i < n_per_class; ++i) add(SynthClass::Grade4, 0.0, "4+4", "train");
    for (int i = 0; i < n_per_class; ++i) add(SynthClass::Grade3, 0.62, "3+4", "eval");
    for (int i = 0; i < n_per_class; ++i) add(SynthClass::Grade3, 0.25, "4+3", "eval");

    std::atomic<std::size_t> next{0};
    std::string failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            try {
                synth_slide(specs[i], out_dir / entries[i].slide_path);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure.empty()) failure = e.what();
                return;
            }
        }
    };
    const int n_threads =
        std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!failure.empty()) throw std::runtime_error(failure);
    write_corpus_manifest(out_dir, entries);
    return entries;
}

void write_corpus_manifest(const std::filesystem::path& dir,
                           const std::vector<CorpusEntry>& entries) {
    json j = json::array();
    for (const auto& e : entries) {
        j.push_back({{"slide_path", e.slide_path}, {"label", e.label},
                     {"split", e.split}});
    }
    std::ofstream out(dir / "dataset.json");
    if (!out) throw std::runtime_error("synth: cannot write dataset manifest");
    out << j.dump(2) << "\n";
}

std::vector<CorpusEntry> load_corpus_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.json");
    if (!in) throw std::runtime_error("synth: missing dataset.json in " + dir.string());
    json j;
    in >> j;
    std::vector<CorpusEntry> entries;
    for (const auto& e : j) {
        entries.push_back({e.at("slide_path").get<std::string>(),
                           e.at("label").get<std::string>(),
                           e.at("split").get<std::string>()});
    }
    return entries;
}

} // namespace prograde
