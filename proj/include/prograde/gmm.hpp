#ifndef PROGRADE_GMM_HPP
#define PROGRADE_GMM_HPP

#include <cstdint>
#include <vector>

namespace prograde {

struct GmmModel {
    int n_modes = 0;
    std::vector<double> means;      // sorted ascending
    std::vector<double> variances;  // >= variance floor
    std::vector<double> weights;    // sum to 1
    double log_likelihood = 0.0;
    bool degenerate = false;        // all samples equal (or EM collapsed)
};

// 1-D Gaussian mixture fit by EM. Modes are initialized evenly spaced over
// the distinct sample values; the variance floor is 1e-6 x sample variance.
// Iterates
// until the log-likelihood improvement drops below tol.
GmmModel gmm_em_1d(const std::vector<double>& samples, int n_modes,
                   std::uint64_t seed, double tol = 1e-8, int max_iter = 500);

// Hard assignment by maximum posterior responsibility; ties go to the lower
// mode index.
std::vector<int> gmm_assign(const std::vector<double>& samples,
                            const GmmModel& model);

} // namespace prograde

#endif
