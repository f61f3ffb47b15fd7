#ifndef PROGRADE_PATTERNS_HPP
#define PROGRADE_PATTERNS_HPP

#include "prograde/nuclei.hpp"
#include "prograde/slide.hpp"

#include <utility>
#include <vector>

namespace prograde {

struct NucleoliParams {
    double separation_threshold = 50.0;  // intensity levels between the modes
    double min_dark_weight = 0.05;       // minimum dark-mode pixel fraction
    int min_pixels = 16;
};

struct NucleoliFlag {
    int nucleus_id = 0;
    bool prominent = false;
    bool insufficient = false;  // nucleus below min_pixels, no fit attempted
    bool degenerate = false;    // EM collapsed (uniform intensities)
    double dark_mean = 0.0;
    double light_mean = 0.0;
    double separation = 0.0;  // light_mean - dark_mean
    double dark_weight = 0.0;
};

// Two-mode EM on each nucleus's member-pixel intensities; the lower-mean
// mode is the nucleolus candidate. The plane holds intensities (dark
// nucleoli = low values), e.g. the inverted hematoxylin plane. Prominent
// iff separation >= threshold and the dark mode carries >= min_dark_weight
// of the pixels.
std::vector<NucleoliFlag> detect_prominent_nucleoli(
    const std::vector<NucleusRecord>& nuclei, const Plane& intensity,
    const NucleoliParams& params = {});

// Vertices of the highest-mean mode of a 3-mode GMM over the clustering
// coefficients. When the top two mode means sit within merge_eps they are
// treated as one split cluster and both are returned; a degenerate fit
// (all C_i equal) returns every vertex. Throws "insufficient graph" when
// fewer than 10 vertices have degree >= 2.
std::vector<int> tumor_subgraph(const NucleiGraph& graph,
                                double merge_eps = 0.1);

struct LumenCandidate {
    std::vector<std::pair<int, int>> pixels;  // region coordinates
    double cx = 0.0, cy = 0.0;
    double area = 0.0;       // pixels
    double perimeter = 0.0;  // boundary chain length, diagonals sqrt(2)
    double roundness = 0.0;  // 4*pi*a / P^2
};

// a / (area of the disk with circumference P) = 4*pi*a/P^2; 1 for an ideal
// circle, smaller the more irregular the shape.
double roundness(double area, double perimeter);

// Bright connected components: min(R,G,B) > channel_threshold, 8-connected,
// components touching the region border dropped (background, not lumen).
std::vector<LumenCandidate> extract_lumen_candidates(const RgbImage& region,
                                                     int channel_threshold = 200);

struct CribriformParams {
    int min_lumens = 3;
    double roundness_threshold = 0.7;
    double dilation_microns = 15.0;  // convex-hull dilation radius
    int channel_threshold = 200;
    double min_lumen_area = 20.0;    // pixels; rejects bright specks
    double mode_merge_eps = 0.1;     // forwarded to tumor_subgraph
};

struct CribriformRegion {
    std::vector<int> vertices;                       // nuclei-graph indices
    std::vector<LumenCandidate> lumens;              // level-0 coordinates
    std::vector<std::pair<int, int>> region_pixels;  // dilated hull, level 0
};

// Per connected component of the tumor subgraph: dilate the convex hull of
// its nucleus centroids, collect qualifying lumens (roundness >=
// roundness_threshold) intersecting that region, report components holding
// at least min_lumens of them.
std::vector<CribriformRegion> detect_cribriform(
    const SlidePackage& slide, const std::vector<NucleusRecord>& nuclei,
    const NucleiGraph& graph, const CribriformParams& params = {});

} // namespace prograde

#endif
