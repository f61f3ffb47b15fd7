#include "prograde/tumor_mask.hpp"

#include "prograde/colorspace.hpp"
#include "prograde/kmeans.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace prograde {

TissueMask extract_tumor_mask(const SlidePackage& slide, int k, std::uint64_t seed) {
    if (k != 3 && k != 4) {
        throw std::invalid_argument("tumor_mask: k must be 3 or 4");
    }
    const LevelInfo& low = slide.lowest_level();
    if (static_cast<long long>(low.width) * low.height > 4LL * 1024 * 1024) {
        throw std::invalid_argument(
            "tumor_mask: lowest level exceeds 4 megapixels; downsample first");
    }
    RgbImage img = read_region(slide, low.level, 0, 0, low.width, low.height);
    LabImage lab = rgb_to_lab(img);

    const std::size_t n = static_cast<std::size_t>(low.width) * low.height;
    Eigen::MatrixXd points(2, n);
    for (int y = 0; y < low.height; ++y) {
        for (int x = 0; x < low.width; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * low.width + x;
            points(0, i) = lab.at(x, y, 1);
            points(1, i) = lab.at(x, y, 2);
        }
    }

    KMeansResult res = kmeans(points, k, seed);

    // Per-cluster mean RGB blue and population.
    std::vector<double> blue_sum(k, 0.0);
    std::vector<std::size_t> pop(k, 0);
    for (int y = 0; y < low.height; ++y) {
        for (int x = 0; x < low.width; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * low.width + x;
            int c = res.assignments[i];
            blue_sum[c] += img.at(x, y, 2);
            pop[c] += 1;
        }
    }
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double ma = pop[a] ? blue_sum[a] / pop[a] : 0.0;
        double mb = pop[b] ? blue_sum[b] / pop[b] : 0.0;
        if (ma != mb) return ma > mb;
        if (pop[a] != pop[b]) return pop[a] > pop[b];
        return a < b;
    });
    // Rank in descending blue becomes the output label, so the second
    // brightest cluster lands on label 1 (tumor).
    std::vector<std::uint8_t> relabel(k, 0);
    for (int rank = 0; rank < k; ++rank) {
        relabel[order[rank]] = static_cast<std::uint8_t>(rank);
    }

    TissueMask mask;
    mask.level = low.level;
    mask.width = low.width;
    mask.height = low.height;
    mask.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        mask.labels[i] = relabel[res.assignments[i]];
    }
    return mask;
}

} // namespace prograde
