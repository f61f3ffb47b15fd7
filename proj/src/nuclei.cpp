#include "prograde/nuclei.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace prograde {

std::vector<NucleusRecord> extract_nuclei(const Plane& hema, double mpp,
                                          const NucleiParams& params) {
    if (mpp <= 0) throw std::invalid_argument("nuclei: mpp must be positive");
    const int w = hema.width, h = hema.height;
    std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            fg[static_cast<std::size_t>(y) * w + x] =
                hema.at(x, y) >= params.threshold ? 1 : 0;
        }
    }
    // Fill single-pixel holes (background pixel with all 4-neighbors set).
    auto at = [&](int x, int y) -> std::uint8_t& {
        return fg[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            if (!at(x, y) && at(x - 1, y) && at(x + 1, y) && at(x, y - 1) &&
                at(x, y + 1)) {
                at(x, y) = 2;  // mark so fills do not cascade
            }
        }
    }
    for (auto& v : fg) {
        if (v == 2) v = 1;
    }

    const double px_per_um2 = 1.0 / (mpp * mpp);
    const double min_px = params.min_area_um2 * px_per_um2;
    const double max_px = params.max_area_um2 * px_per_um2;

    std::vector<int> label(fg.size(), -1);
    std::vector<NucleusRecord> out;
    std::vector<std::pair<int, int>> stack;
    int next_id = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (!fg[i0] || label[i0] >= 0) continue;
            NucleusRecord rec;
            stack.assign(1, {x0, y0});
            label[i0] = next_id;
            double sx = 0, sy = 0, shema = 0;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                rec.pixels.emplace_back(x, y);
                sx += x;
                sy += y;
                shema += hema.at(x, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (!fg[ni] || label[ni] >= 0) continue;
                        label[ni] = next_id;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
            rec.area = static_cast<int>(rec.pixels.size());
            if (rec.area < min_px || rec.area > max_px) continue;
            rec.id = next_id++;
            rec.cx = sx / rec.area;
            rec.cy = sy / rec.area;
            rec.mean_hema = shema / rec.area;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

NucleiGraph build_nuclei_graph(const std::vector<NucleusRecord>& nuclei,
                               double mpp, double radius_microns) {
    if (mpp <= 0) throw std::invalid_argument("nuclei: mpp must be positive");
    NucleiGraph g;
    g.n = static_cast<int>(nuclei.size());
    g.radius_microns = radius_microns;
    g.adjacency.assign(g.n, {});
    const double radius_px = radius_microns / mpp;
    const double r2 = radius_px * radius_px;
    for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) {
            double dx = nuclei[i].cx - nuclei[j].cx;
            double dy = nuclei[i].cy - nuclei[j].cy;
            if (dx * dx + dy * dy <= r2) {
                g.edges.emplace_back(i, j);
                g.adjacency[i].push_back(j);
                g.adjacency[j].push_back(i);
            }
        }
    }
    g.coefficients = clustering_coefficients(g);
    return g;
}

std::vector<double> clustering_coefficients(const NucleiGraph& graph) {
    std::vector<double> c(graph.n, 0.0);
    // Adjacency lookup bitmap reused across vertices.
    std::vector<std::uint8_t> is_neighbor(graph.n, 0);
    for (int i = 0; i < graph.n; ++i) {
        const auto& nb = graph.adjacency[i];
        const int k = static_cast<int>(nb.size());
        if (k < 2) continue;
        for (int v : nb) is_neighbor[v] = 1;
        long long among = 0;
        for (int v : nb) {
            for (int u : graph.adjacency[v]) {
                if (u > v && is_neighbor[u]) ++among;
            }
        }
        for (int v : nb) is_neighbor[v] = 0;
        c[i] = 2.0 * among / (static_cast<double>(k) * (k - 1));
    }
    return c;
}

} // namespace prograde
