#include "prograde/patterns.hpp"

#include "prograde/gmm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prograde {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Moore-neighbor directions, clockwise with y pointing down.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

// Boundary chain length around one component: Moore tracing from the
// topmost-leftmost pixel, diagonal steps weighted sqrt(2). An isolated
// pixel counts as a unit square.
double trace_perimeter(const std::vector<int>& labels, int w, int h, int id,
                       int sx, int sy) {
    auto at = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h &&
               labels[static_cast<std::size_t>(y) * w + x] == id;
    };
    auto scan = [&](int x, int y, int entry_dir) {
        for (int i = 0; i < 8; ++i) {
            const int d = (entry_dir + 6 + i) % 8;
            if (at(x + kDx[d], y + kDy[d])) return d;
        }
        return -1;
    };
    const int first_dir = scan(sx, sy, 0);
    if (first_dir < 0) return 4.0;
    double perimeter = 0.0;
    int cx = sx, cy = sy, dir = first_dir;
    const std::size_t limit = static_cast<std::size_t>(w) * h * 8 + 16;
    for (std::size_t steps = 0; steps < limit; ++steps) {
        perimeter += (dir & 1) ? std::sqrt(2.0) : 1.0;
        cx += kDx[dir];
        cy += kDy[dir];
        const int next = scan(cx, cy, dir);
        if (cx == sx && cy == sy && next == first_dir) break;
        dir = next;
    }
    return perimeter;
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                    const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                        const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

// 0 inside the hull, Euclidean distance to its boundary outside.
double hull_distance(const std::vector<Eigen::Vector2d>& hull,
                     const Eigen::Vector2d& p) {
    if (hull.empty()) return std::numeric_limits<double>::infinity();
    if (hull.size() == 1) return (p - hull[0]).norm();
    if (hull.size() == 2) return segment_distance(p, hull[0], hull[1]);
    bool inside = true;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Eigen::Vector2d& a = hull[i];
        const Eigen::Vector2d& b = hull[(i + 1) % hull.size()];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) -
                             (b.y() - a.y()) * (p.x() - a.x());
        if (cross < 0) inside = false;
        best = std::min(best, segment_distance(p, a, b));
    }
    return inside ? 0.0 : best;
}

} // namespace

std::vector<NucleoliFlag> detect_prominent_nucleoli(
    const std::vector<NucleusRecord>& nuclei, const Plane& intensity,
    const NucleoliParams& params) {
    std::vector<NucleoliFlag> flags;
    flags.reserve(nuclei.size());
    for (const auto& nucleus : nuclei) {
        NucleoliFlag flag;
        flag.nucleus_id = nucleus.id;
        if (nucleus.area < params.min_pixels) {
            flag.insufficient = true;
            flags.push_back(flag);
            continue;
        }
        std::vector<double> samples;
        samples.reserve(nucleus.pixels.size());
        for (const auto& [x, y] : nucleus.pixels) {
            samples.push_back(static_cast<double>(intensity.at(x, y)));
        }
        GmmModel model = gmm_em_1d(samples, 2,
                                   static_cast<std::uint64_t>(nucleus.id));
        flag.degenerate = model.degenerate;
        flag.dark_mean = model.means[0];
        flag.light_mean = model.means[1];
        flag.separation = flag.light_mean - flag.dark_mean;
        flag.dark_weight = model.weights[0];
        flag.prominent = !model.degenerate &&
                         flag.separation >= params.separation_threshold &&
                         flag.dark_weight >= params.min_dark_weight;
        flags.push_back(flag);
    }
    return flags;
}

std::vector<int> tumor_subgraph(const NucleiGraph& graph, double merge_eps) {
    int eligible = 0;
    for (const auto& adj : graph.adjacency) {
        if (adj.size() >= 2) ++eligible;
    }
    if (eligible < 10) throw std::runtime_error("patterns: insufficient graph");
    const std::vector<double>& c =
        graph.coefficients.empty() ? clustering_coefficients(graph)
                                   : graph.coefficients;
    std::vector<int> out;
    GmmModel model = gmm_em_1d(c, 3, 0);
    if (model.degenerate) {
        out.resize(graph.n);
        for (int i = 0; i < graph.n; ++i) out[i] = i;
        return out;
    }
    const std::vector<int> assign = gmm_assign(c, model);
    // EM sometimes splits one natural cluster across the top two modes;
    // near-identical means are treated as the same tumor mode.
    const bool merge_top = model.means[2] - model.means[1] <= merge_eps;
    for (int i = 0; i < graph.n; ++i) {
        if (assign[i] == 2 || (merge_top && assign[i] == 1)) out.push_back(i);
    }
    return out;
}

double roundness(double area, double perimeter) {
    if (area <= 0.0 || perimeter <= 0.0) {
        throw std::invalid_argument("patterns: roundness needs positive area and perimeter");
    }
    return 4.0 * kPi * area / (perimeter * perimeter);
}

std::vector<LumenCandidate> extract_lumen_candidates(const RgbImage& region,
                                                     int channel_threshold) {
    const int w = region.width, h = region.height;
    std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
    auto bright = [&](int x, int y) {
        return region.at(x, y, 0) > channel_threshold &&
               region.at(x, y, 1) > channel_threshold &&
               region.at(x, y, 2) > channel_threshold;
    };
    std::vector<LumenCandidate> out;
    std::vector<std::pair<int, int>> stack;
    int next_id = 0;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (labels[static_cast<std::size_t>(sy) * w + sx] != -1 || !bright(sx, sy)) {
                continue;
            }
            const int id = next_id++;
            LumenCandidate cand;
            bool touches_border = false;
            labels[static_cast<std::size_t>(sy) * w + sx] = id;
            stack.push_back({sx, sy});
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                cand.pixels.push_back({x, y});
                cand.cx += x;
                cand.cy += y;
                if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border = true;
                for (int d = 0; d < 8; ++d) {
                    const int nx = x + kDx[d], ny = y + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    auto& lab = labels[static_cast<std::size_t>(ny) * w + nx];
                    if (lab != -1 || !bright(nx, ny)) continue;
                    lab = id;
                    stack.push_back({nx, ny});
                }
            }
            if (touches_border) continue;
            cand.area = static_cast<double>(cand.pixels.size());
            cand.cx /= cand.area;
            cand.cy /= cand.area;
            cand.perimeter = trace_perimeter(labels, w, h, id, sx, sy);
            cand.roundness = roundness(cand.area, cand.perimeter);
            out.push_back(std::move(cand));
        }
    }
    return out;
}

std::vector<CribriformRegion> detect_cribriform(
    const SlidePackage& slide, const std::vector<NucleusRecord>& nuclei,
    const NucleiGraph& graph, const CribriformParams& params) {
    if (static_cast<int>(nuclei.size()) != graph.n) {
        throw std::invalid_argument("patterns: graph does not match the nucleus list");
    }
    const std::vector<int> subset = tumor_subgraph(graph, params.mode_merge_eps);
    std::vector<char> in_subset(static_cast<std::size_t>(graph.n), 0);
    for (int v : subset) in_subset[static_cast<std::size_t>(v)] = 1;

    std::vector<CribriformRegion> out;
    std::vector<char> visited(static_cast<std::size_t>(graph.n), 0);
    const double r = params.dilation_microns / slide.mpp;
    for (int start : subset) {
        if (visited[static_cast<std::size_t>(start)]) continue;
        std::vector<int> component;
        std::vector<int> stack{start};
        visited[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            component.push_back(v);
            for (int u : graph.adjacency[static_cast<std::size_t>(v)]) {
                if (!in_subset[static_cast<std::size_t>(u)] ||
                    visited[static_cast<std::size_t>(u)]) {
                    continue;
                }
                visited[static_cast<std::size_t>(u)] = 1;
                stack.push_back(u);
            }
        }
        if (component.size() < 3) continue;
        std::sort(component.begin(), component.end());

        std::vector<Eigen::Vector2d> pts;
        pts.reserve(component.size());
        double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
        for (int v : component) {
            const auto& n = nuclei[static_cast<std::size_t>(v)];
            pts.push_back({n.cx, n.cy});
            min_x = std::min(min_x, n.cx);
            max_x = std::max(max_x, n.cx);
            min_y = std::min(min_y, n.cy);
            max_y = std::max(max_y, n.cy);
        }
        const auto hull = convex_hull(pts);
        const int bx = std::max(0, static_cast<int>(std::floor(min_x - r)));
        const int by = std::max(0, static_cast<int>(std::floor(min_y - r)));
        const int ex = std::min(slide.width - 1, static_cast<int>(std::ceil(max_x + r)));
        const int ey = std::min(slide.height - 1, static_cast<int>(std::ceil(max_y + r)));
        const int bw = ex - bx + 1, bh = ey - by + 1;
        if (bw <= 0 || bh <= 0) continue;

        CribriformRegion region;
        region.vertices = component;
        std::vector<char> in_region(static_cast<std::size_t>(bw) * bh, 0);
        for (int y = by; y <= ey; ++y) {
            for (int x = bx; x <= ex; ++x) {
                if (hull_distance(hull, {static_cast<double>(x),
                                         static_cast<double>(y)}) > r) {
                    continue;
                }
                in_region[static_cast<std::size_t>(y - by) * bw + (x - bx)] = 1;
                region.region_pixels.push_back({x, y});
            }
        }

        RgbImage rgb = read_region(slide, 0, bx, by, bw, bh);
        for (auto& cand : extract_lumen_candidates(rgb, params.channel_threshold)) {
            if (cand.area < params.min_lumen_area ||
                cand.roundness < params.roundness_threshold) {
                continue;
            }
            bool intersects = false;
            for (const auto& [x, y] : cand.pixels) {
                if (in_region[static_cast<std::size_t>(y) * bw + x]) {
                    intersects = true;
                    break;
                }
            }
            if (!intersects) continue;
            for (auto& [x, y] : cand.pixels) {
                x += bx;
                y += by;
            }
            cand.cx += bx;
            cand.cy += by;
            region.lumens.push_back(std::move(cand));
        }
        if (static_cast<int>(region.lumens.size()) >= params.min_lumens) {
            out.push_back(std::move(region));
        }
    }
    return out;
}

} // namespace prograde
