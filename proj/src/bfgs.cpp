#include "prograde/bfgs.hpp"

#include <cmath>
#include <stdexcept>

namespace prograde {

BfgsReport bfgs_minimize(const GradObjective& objective, Eigen::VectorXd x0,
                         double grad_tol, int max_iter) {
    if (grad_tol <= 0.0) throw std::invalid_argument("bfgs: grad_tol must be > 0");
    const int n = static_cast<int>(x0.size());

    Eigen::VectorXd g(n);
    double f = objective(x0, g);
    if (!std::isfinite(f) || !g.allFinite()) {
        throw std::runtime_error("bfgs: non-finite objective");
    }

    BfgsReport report;
    report.f_history.push_back(f);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = std::move(x0);

    constexpr double kArmijoC1 = 1e-4;
    constexpr double kShrink = 0.5;

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (g.norm() <= grad_tol) break;

        Eigen::VectorXd p = -(h_inv * g);
        double slope = g.dot(p);
        if (slope >= 0.0) {
            // Numerical loss of descent; restart from steepest descent.
            h_inv.setIdentity();
            p = -g;
            slope = g.dot(p);
        }

        double step = 1.0;
        Eigen::VectorXd x_new(n), g_new(n);
        double f_new = f;
        bool accepted = false;
        while (step > 1e-16) {
            x_new = x + step * p;
            f_new = objective(x_new, g_new);
            if (std::isfinite(f_new) && g_new.allFinite() &&
                f_new <= f + kArmijoC1 * step * slope) {
                accepted = true;
                break;
            }
            // Interpolated shrink, clamped into [0.1, 0.5] of the current step.
            double denom = 2.0 * (f_new - f - slope * step);
            double step_q = (std::isfinite(f_new) && denom > 0.0)
                                ? -slope * step * step / denom
                                : kShrink * step;
            step = std::min(std::max(step_q, 0.1 * step), kShrink * step);
        }
        if (!accepted) break;  // line search stalled at the resolution of doubles

        // One quadratic-interpolation refinement toward the line minimizer;
        // exact for quadratic objectives, so BFGS terminates finitely there.
        {
            double denom = 2.0 * (f_new - f - slope * step);
            if (denom > 0.0) {
                double step_q = -slope * step * step / denom;
                if (step_q > 0.0 && step_q <= 8.0 * step &&
                    std::abs(step_q - step) > 1e-12 * step) {
                    Eigen::VectorXd x_q = x + step_q * p;
                    Eigen::VectorXd g_q(n);
                    double f_q = objective(x_q, g_q);
                    if (std::isfinite(f_q) && g_q.allFinite() &&
                        f_q <= f + kArmijoC1 * step_q * slope && f_q <= f_new) {
                        x_new = std::move(x_q);
                        g_new = std::move(g_q);
                        f_new = f_q;
                    }
                }
            }
        }

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            double rho = 1.0 / sy;
            Eigen::MatrixXd left =
                Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
        } else {
            h_inv.setIdentity();
        }

        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;
        report.f_history.push_back(f);
    }

    report.x_star = std::move(x);
    report.f_star = f;
    report.grad_norm = g.norm();
    report.iterations = iter;
    report.converged = report.grad_norm <= grad_tol;
    return report;
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd probe = x;
    for (int i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        double fp = f(probe);
        probe(i) = x(i) - h;
        double fm = f(probe);
        probe(i) = x(i);
        grad(i) = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace prograde
