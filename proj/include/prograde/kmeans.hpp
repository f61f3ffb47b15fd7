#ifndef PROGRADE_KMEANS_HPP
#define PROGRADE_KMEANS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace prograde {

struct KMeansResult {
    std::vector<int> assignments;   // per point, cluster index in [0, k)
    Eigen::MatrixXd centers;        // d x k
    double objective = 0.0;         // sum of squared distances to assigned center
};

// Lloyd's algorithm with distance-weighted (k-means++ style) seeding.
// Runs a small fixed number of seeded restarts and keeps the best objective.
// points: d x n column-major, one column per point.
// Throws std::invalid_argument on empty input or fewer distinct points than k.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iter = 100);

} // namespace prograde

#endif
