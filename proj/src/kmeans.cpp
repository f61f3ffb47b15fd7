#include "prograde/kmeans.hpp"
#include "prograde/rng.hpp"

#include <limits>
#include <stdexcept>

namespace prograde {

namespace {

int count_distinct(const Eigen::MatrixXd& points, int cap) {
    const int n = static_cast<int>(points.cols());
    int distinct = 0;
    for (int i = 0; i < n && distinct < cap; ++i) {
        bool seen = false;
        for (int j = 0; j < i; ++j) {
            if ((points.col(i) - points.col(j)).squaredNorm() == 0.0) {
                seen = true;
                break;
            }
        }
        if (!seen) ++distinct;
    }
    return distinct;
}

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const int n = static_cast<int>(points.cols());
    Eigen::MatrixXd centers(points.rows(), k);
    centers.col(0) = points.col(static_cast<int>(rng.below(n)));
    Eigen::VectorXd d2(n);
    for (int i = 0; i < n; ++i) {
        d2(i) = (points.col(i) - centers.col(0)).squaredNorm();
    }
    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.below(n));
        } else {
            double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.col(c) = points.col(pick);
        for (int i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (points.col(i) - centers.col(c)).squaredNorm());
        }
    }
    return centers;
}

KMeansResult lloyd_from_centers(const Eigen::MatrixXd& points,
                                Eigen::MatrixXd centers, int max_iter) {
    const int n = static_cast<int>(points.cols());
    const int k = static_cast<int>(centers.cols());
    std::vector<int> assign(n, -1);
    std::vector<int> counts(k);
    double objective = std::numeric_limits<double>::infinity();
    double prev_objective = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        objective = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.col(i) - centers.col(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (points.col(i) - centers.col(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            objective += best_d;
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (objective > prev_objective + 1e-9 * (1.0 + prev_objective)) {
            throw std::logic_error("kmeans objective increased");
        }
        prev_objective = objective;
        if (!changed && iter > 0) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            sums.col(assign[i]) += points.col(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.col(c) = sums.col(c) / counts[c];
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    double d = (points.col(i) - centers.col(assign[i])).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.col(c) = points.col(far);
                prev_objective = std::numeric_limits<double>::infinity();
            }
        }
    }

    // Final tightening pass so the invariants hold exactly: every point at its
    // nearest center (ties to lowest index), objective recomputed from that.
    objective = 0.0;
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = (points.col(i) - centers.col(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            double d = (points.col(i) - centers.col(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        assign[i] = best;
        objective += best_d;
    }

    KMeansResult result;
    result.assignments = std::move(assign);
    result.centers = std::move(centers);
    result.objective = objective;
    return result;
}

KMeansResult lloyd(const Eigen::MatrixXd& points, int k, int max_iter, Rng rng) {
    return lloyd_from_centers(points, seed_centers(points, k, rng), max_iter);
}

KMeansResult exact_two_clusters(const Eigen::MatrixXd& points) {
    const int n = static_cast<int>(points.cols());
    double best_obj = std::numeric_limits<double>::infinity();
    unsigned best_mask = 1;
    for (unsigned mask = 1; mask < (1u << n) - 1u; ++mask) {
        Eigen::VectorXd c0 = Eigen::VectorXd::Zero(points.rows());
        Eigen::VectorXd c1 = Eigen::VectorXd::Zero(points.rows());
        int n0 = 0, n1 = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                c1 += points.col(i);
                ++n1;
            } else {
                c0 += points.col(i);
                ++n0;
            }
        }
        c0 /= n0;
        c1 /= n1;
        double obj = 0.0;
        for (int i = 0; i < n; ++i) {
            obj += (mask & (1u << i)) ? (points.col(i) - c1).squaredNorm()
                                      : (points.col(i) - c0).squaredNorm();
        }
        if (obj < best_obj) {
            best_obj = obj;
            best_mask = mask;
        }
    }
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(points.rows(), 2);
    int counts[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        int c = (best_mask & (1u << i)) ? 1 : 0;
        centers.col(c) += points.col(i);
        ++counts[c];
    }
    for (int c = 0; c < 2; ++c) centers.col(c) /= counts[c];
    // Re-run the assignment pass so the nearest-center invariant holds.
    return lloyd_from_centers(points, std::move(centers), 1);
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iter) {
    if (points.cols() == 0) throw std::invalid_argument("kmeans: empty input");
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be >= 1");
    if (count_distinct(points, k) < k) {
        throw std::invalid_argument("kmeans: insufficient distinct points");
    }

    // Small instances get more restarts; the cost is negligible and Lloyd's
    // local optima are far more likely there.
    const int kRestarts = points.cols() <= 1024 ? 16 : 6;
    Rng master(seed);
    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < kRestarts; ++r) {
        KMeansResult cand = lloyd(points, k, max_iter, master.fork(r));
        if (cand.objective < best.objective) best = std::move(cand);
    }

    // Tiny two-cluster instances are solved exactly by enumerating all
    // assignments, so the result is the global optimum there.
    const int n = static_cast<int>(points.cols());
    if (k == 2 && n <= 16) {
        KMeansResult exact = exact_two_clusters(points);
        if (exact.objective < best.objective) best = std::move(exact);
    }
    return best;
}

} // namespace prograde
