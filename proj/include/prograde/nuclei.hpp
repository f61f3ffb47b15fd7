#ifndef PROGRADE_NUCLEI_HPP
#define PROGRADE_NUCLEI_HPP

#include "prograde/image.hpp"

#include <utility>
#include <vector>

namespace prograde {

struct NucleusRecord {
    int id = 0;
    double cx = 0, cy = 0;  // centroid, level-0 pixels
    std::vector<std::pair<int, int>> pixels;
    int area = 0;           // pixels
    double mean_hema = 0;   // mean 8-bit hematoxylin value over the region
};

struct NucleiParams {
    int threshold = 128;         // hematoxylin image value
    double min_area_um2 = 10.0;
    double max_area_um2 = 120.0;
};

// Stand-in nucleus detector: fixed threshold on the hematoxylin plane,
// single-pixel hole fill, 8-connected components, area filter in square
// microns (converted through mpp). Touching nuclei stay merged.
std::vector<NucleusRecord> extract_nuclei(const Plane& hema, double mpp,
                                          const NucleiParams& params = {});

struct NucleiGraph {
    int n = 0;                                 // vertices = nucleus list order
    std::vector<std::pair<int, int>> edges;    // index pairs, i < j
    std::vector<std::vector<int>> adjacency;   // per vertex
    double radius_microns = 30.0;
    std::vector<double> coefficients;          // per-vertex C_i
};

// Edge (i, j) iff centroid distance <= radius_microns (through mpp).
// Coefficients are filled by clustering_coefficients.
NucleiGraph build_nuclei_graph(const std::vector<NucleusRecord>& nuclei,
                               double mpp, double radius_microns = 30.0);

// C_i = 2 * (edges among neighbors) / (k_i * (k_i - 1)); 0 when k_i < 2.
std::vector<double> clustering_coefficients(const NucleiGraph& graph);

} // namespace prograde

#endif
