#ifndef PROGRADE_BFGS_HPP
#define PROGRADE_BFGS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace prograde {

// Objective returning the value and filling the gradient.
using GradObjective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BfgsReport {
    Eigen::VectorXd x_star;
    double f_star = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> f_history;  // non-increasing by construction
};

// BFGS with Armijo backtracking (c1 = 1e-4, shrink 0.5, initial step 1).
// The inverse-Hessian approximation is reset to identity whenever the
// curvature condition s'y > 0 fails.
// Throws std::runtime_error on a non-finite objective or gradient at x0.
BfgsReport bfgs_minimize(const GradObjective& objective, Eigen::VectorXd x0,
                         double grad_tol = 1e-8, int max_iter = 200);

// Central finite differences, one coordinate at a time.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h);

} // namespace prograde

#endif
