#include "prograde/stain.hpp"
#include "prograde/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prograde {

StainModel default_stain_model() {
    StainModel model;
    // H / E / DAB optical-density directions from the standard color
    // deconvolution prior, unit-normalized.
    model.u = Eigen::Vector3d(0.650, 0.704, 0.286).normalized();
    model.v = Eigen::Vector3d(0.072, 0.990, 0.105).normalized();
    model.w = Eigen::Vector3d(0.268, 0.570, 0.776).normalized();
    model.M.col(0) = model.u;
    model.M.col(1) = model.v;
    model.M.col(2) = model.w;
    model.D_bar = model.M.inverse();
    model.D = model.D_bar;
    return model;
}

Eigen::Matrix3d second_moment(const OdImage& od) {
    if (od.width <= 0 || od.height <= 0) {
        throw std::invalid_argument("second_moment: empty image");
    }
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    const std::size_t n = static_cast<std::size_t>(od.width) * od.height;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d o(od.values[3 * i], od.values[3 * i + 1], od.values[3 * i + 2]);
        g.noalias() += o * o.transpose();
    }
    return g / static_cast<double>(n);
}

EnergyReport energy_from_moment(const Eigen::Matrix3d& D,
                                const Eigen::Matrix3d& G,
                                const StainModel& model) {
    if (model.lambda < 0.0) throw std::invalid_argument("energy: lambda must be >= 0");
    EnergyReport report;
    Eigen::Vector3d d = D.row(2).transpose();
    report.data_term = d.dot(G * d);
    Eigen::Matrix3d diff = D - model.D_bar;
    report.reg_term = model.lambda * diff.squaredNorm();
    report.total = report.data_term + report.reg_term;

    Eigen::Matrix3d grad = 2.0 * model.lambda * diff;
    grad.row(2) += (2.0 * (G * d)).transpose();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            report.gradient(3 * r + c) = grad(r, c);
        }
    }
    return report;
}

EnergyReport energy(const Eigen::Matrix3d& D, const OdImage& od,
                    const StainModel& model) {
    return energy_from_moment(D, second_moment(od), model);
}

Eigen::Vector3d ridge_row3_from_moment(const Eigen::Matrix3d& G,
                                       const StainModel& model) {
    if (model.lambda <= 0.0) {
        throw std::invalid_argument("ridge_row3: lambda must be > 0");
    }
    Eigen::Matrix3d a = G + model.lambda * Eigen::Matrix3d::Identity();
    Eigen::Vector3d b = model.lambda * model.D_bar.row(2).transpose();
    return a.ldlt().solve(b);
}

Eigen::Vector3d ridge_row3_closed_form(const OdImage& od, const StainModel& model) {
    return ridge_row3_from_moment(second_moment(od), model);
}

StainModel optimize_stain_matrix_from_moment(const Eigen::Matrix3d& G,
                                             const StainModel& model,
                                             double grad_tol) {
    if (model.lambda <= 0.0) {
        throw std::invalid_argument("optimize_stain_matrix: lambda must be > 0");
    }
    GradObjective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        Eigen::Matrix3d d;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) d(r, c) = x(3 * r + c);
        EnergyReport rep = energy_from_moment(d, G, model);
        grad = rep.gradient;
        return rep.total;
    };
    Eigen::VectorXd x0(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) x0(3 * r + c) = model.D_bar(r, c);

    BfgsReport report = bfgs_minimize(objective, x0, grad_tol, 500);

    StainModel out = model;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.D(r, c) = report.x_star(3 * r + c);
    return out;
}

StainModel optimize_stain_matrix(const OdImage& od, const StainModel& model,
                                 double grad_tol) {
    return optimize_stain_matrix_from_moment(second_moment(od), model, grad_tol);
}

StainDensityImage apply_decomposition(const OdImage& od, const Eigen::Matrix3d& D) {
    StainDensityImage s(od.width, od.height);
    const std::size_t n = static_cast<std::size_t>(od.width) * od.height;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d o(od.values[3 * i], od.values[3 * i + 1], od.values[3 * i + 2]);
        Eigen::Vector3d v = D * o;
        s.values[3 * i] = v(0);
        s.values[3 * i + 1] = v(1);
        s.values[3 * i + 2] = v(2);
    }
    return s;
}

Plane hematoxylin_plane_to_image(const StainDensityImage& s) {
    const double max_od = std::log(256.0);
    Plane plane(s.width, s.height);
    const std::size_t n = static_cast<std::size_t>(s.width) * s.height;
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::clamp(s.values[3 * i], 0.0, max_od);
        plane.values[i] = static_cast<std::uint8_t>(std::round(v / max_od * 255.0));
    }
    return plane;
}

} // namespace prograde
