#include "prograde/gmm.hpp"
#include "prograde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prograde {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_normal_pdf(double x, double mean, double var) {
    double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

void sort_modes(GmmModel& m) {
    std::vector<int> order(m.n_modes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return m.means[a] < m.means[b]; });
    GmmModel out = m;
    for (int i = 0; i < m.n_modes; ++i) {
        out.means[i] = m.means[order[i]];
        out.variances[i] = m.variances[order[i]];
        out.weights[i] = m.weights[order[i]];
    }
    m = std::move(out);
}

} // namespace

GmmModel gmm_em_1d(const std::vector<double>& samples, int n_modes,
                   std::uint64_t seed, double tol, int max_iter) {
    (void)seed; // initialization is quantile-based and fully deterministic
    const int n = static_cast<int>(samples.size());
    if (n_modes < 1) throw std::invalid_argument("gmm_em_1d: n_modes must be >= 1");
    if (n < 2 * n_modes) throw std::invalid_argument("gmm_em_1d: too few samples");
    if (tol <= 0.0) throw std::invalid_argument("gmm_em_1d: tol must be > 0");

    double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= n;

    GmmModel model;
    model.n_modes = n_modes;
    model.means.resize(n_modes);
    model.variances.resize(n_modes);
    model.weights.assign(n_modes, 1.0 / n_modes);

    const double floor = std::max(1e-6 * var, 1e-12);

    if (var == 0.0) {
        // All samples equal: a single effective mode carries all the weight.
        std::fill(model.means.begin(), model.means.end(), mean);
        std::fill(model.variances.begin(), model.variances.end(), floor);
        std::fill(model.weights.begin(), model.weights.end(), 0.0);
        model.weights[0] = 1.0;
        model.degenerate = true;
        model.log_likelihood = n * log_normal_pdf(mean, mean, floor);
        return model;
    }

    // Initialize means evenly spaced over the distinct sample values; raw
    // quantiles can start several modes on the same value for skewed data,
    // which is a symmetric fixed point EM never leaves.
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq = sorted;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    const int d = static_cast<int>(uniq.size());
    for (int m = 0; m < n_modes; ++m) {
        if (n_modes == 1) {
            model.means[m] = uniq[(d - 1) / 2];
        } else {
            model.means[m] = uniq[std::min(d - 1, m * (d - 1) / (n_modes - 1))];
        }
    }
    std::fill(model.variances.begin(), model.variances.end(), std::max(var, floor));

    std::vector<double> resp(static_cast<std::size_t>(n) * n_modes);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iter; ++iter) {
        // E step
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            double max_lp = -std::numeric_limits<double>::infinity();
            for (int m = 0; m < n_modes; ++m) {
                double lp = model.weights[m] > 0.0
                                ? std::log(model.weights[m]) +
                                      log_normal_pdf(samples[i], model.means[m],
                                                     model.variances[m])
                                : -std::numeric_limits<double>::infinity();
                resp[i * n_modes + m] = lp;
                max_lp = std::max(max_lp, lp);
            }
            double sum = 0.0;
            for (int m = 0; m < n_modes; ++m) {
                sum += std::exp(resp[i * n_modes + m] - max_lp);
            }
            double lse = max_lp + std::log(sum);
            ll += lse;
            for (int m = 0; m < n_modes; ++m) {
                resp[i * n_modes + m] = std::exp(resp[i * n_modes + m] - lse);
            }
        }
        model.log_likelihood = ll;
        if (ll + 1e-9 < prev_ll) {
            // Only the variance floor can cause this; treat as converged.
            break;
        }
        if (ll - prev_ll < tol && iter > 0) break;
        prev_ll = ll;

        // M step
        for (int m = 0; m < n_modes; ++m) {
            double nk = 0.0, mu = 0.0;
            for (int i = 0; i < n; ++i) nk += resp[i * n_modes + m];
            if (nk < 1e-300) {
                model.weights[m] = 0.0;
                model.degenerate = true;
                continue;
            }
            for (int i = 0; i < n; ++i) mu += resp[i * n_modes + m] * samples[i];
            mu /= nk;
            double v = 0.0;
            for (int i = 0; i < n; ++i) {
                double d = samples[i] - mu;
                v += resp[i * n_modes + m] * d * d;
            }
            v /= nk;
            model.weights[m] = nk / n;
            model.means[m] = mu;
            model.variances[m] = std::max(v, floor);
        }
    }

    sort_modes(model);
    return model;
}

std::vector<int> gmm_assign(const std::vector<double>& samples,
                            const GmmModel& model) {
    std::vector<int> labels(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        int best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < model.n_modes; ++m) {
            if (model.weights[m] <= 0.0) continue;
            double lp = std::log(model.weights[m]) +
                        log_normal_pdf(samples[i], model.means[m], model.variances[m]);
            if (lp > best_lp) {
                best_lp = lp;
                best = m;
            }
        }
        labels[i] = best;
    }
    return labels;
}

} // namespace prograde
