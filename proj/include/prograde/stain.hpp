#ifndef PROGRADE_STAIN_HPP
#define PROGRADE_STAIN_HPP

#include "prograde/image.hpp"

#include <Eigen/Dense>
#include <string>

namespace prograde {

// Stain mixing model in optical-density space. Columns of M are the unit
// stain direction vectors; D is the decomposition matrix applied to OD
// pixels, with D_bar its prior value.
struct StainModel {
    Eigen::Vector3d u;  // hematoxylin
    Eigen::Vector3d v;  // eosin
    Eigen::Vector3d w;  // third stain
    Eigen::Matrix3d M;      // [u v w]
    Eigen::Matrix3d D;      // current decomposition matrix
    Eigen::Matrix3d D_bar;  // prior decomposition matrix
    double lambda = 1.0;    // regularization weight, >= 0
    std::string prior_id = "ruifrok-johnston-he-dab";
};

struct EnergyReport {
    double total = 0.0;
    double data_term = 0.0;  // mean over pixels of (d . O)^2, d = row 3 of D
    double reg_term = 0.0;   // lambda * ||D - D_bar||_F^2
    Eigen::Matrix<double, 9, 1> gradient;  // dE/dD, row-major over D
};

// H&E(+third stain) prior with unit-normalized direction vectors and
// D_bar = M^-1.
StainModel default_stain_model();

// G = mean over pixels of O O^T. The energy depends on the image only
// through this matrix.
Eigen::Matrix3d second_moment(const OdImage& od);

EnergyReport energy(const Eigen::Matrix3d& D, const OdImage& od,
                    const StainModel& model);
EnergyReport energy_from_moment(const Eigen::Matrix3d& D,
                                const Eigen::Matrix3d& G,
                                const StainModel& model);

// Exact minimizer of the third row: solves (G + lambda I) d = lambda d_bar3.
// Rows 1-2 of the full minimizer equal rows 1-2 of D_bar. Requires lambda > 0.
Eigen::Vector3d ridge_row3_closed_form(const OdImage& od, const StainModel& model);
Eigen::Vector3d ridge_row3_from_moment(const Eigen::Matrix3d& G,
                                       const StainModel& model);

// BFGS over the 9 entries of D starting from D_bar. Returns a copy of the
// model with the optimized D. Requires lambda > 0.
StainModel optimize_stain_matrix(const OdImage& od, const StainModel& model,
                                 double grad_tol = 1e-9);
StainModel optimize_stain_matrix_from_moment(const Eigen::Matrix3d& G,
                                             const StainModel& model,
                                             double grad_tol = 1e-9);

// Per pixel S = D * O.
StainDensityImage apply_decomposition(const OdImage& od, const Eigen::Matrix3d& D);

// Affine rescale of plane 0 (hematoxylin), clamped to [0, log 256], onto
// [0, 255].
Plane hematoxylin_plane_to_image(const StainDensityImage& s);

} // namespace prograde

#endif
