#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sem/systems.hpp"

namespace sem {

/// Penalized regression spline: minimizer of
///   (1/n) sum_j (y_j - f(t_j))^2 + nu * int (d^q f / dt^q)^2 dt
/// represented in a B-spline basis of order 2q (degree 2q-1) with knots at the
/// observation times (thinned to <= 1500 quantile knots for long records).
/// The curve is C^{2q-2}-smooth; derivatives of orders 0..2q-2 are available.
struct SmoothedCurve {
    int q = 2;
    double nu = 0.0;
    Eigen::VectorXd knots;  ///< full knot vector with boundary multiplicity 2q
    Eigen::VectorXd coef;   ///< spline coefficients
    double t_min = 0.0, t_max = 0.0;
    double rss = 0.0;       ///< residual sum of squares at the fit
    double edf = 0.0;       ///< tr(A_nu), effective degrees of freedom
    double gcv = 0.0;

    double value(double t) const;
    double derivative(double t, int order) const;  ///< order 0..2q-2
};

/// Fit at a fixed penalty nu.  Requires n >= 2q and strictly increasing times.
SmoothedCurve fit_smoother(const Eigen::VectorXd& times, const Eigen::VectorXd& y,
                           int q, double nu);

struct GcvSelection {
    SmoothedCurve fit;
    std::vector<double> nu_grid;
    std::vector<double> gcv_values;  ///< NaN where skipped (degenerate trace)
};

/// Generalized cross-validation over the given nu grid; the default (empty)
/// grid is 40 log-spaced values spanning 1e-10..1e+2 times a design-scale
/// normalizer.  Ties resolve toward larger nu.  Throws numeric_error when
/// every grid point is degenerate.
GcvSelection gcv_select(const Eigen::VectorXd& times, const Eigen::VectorXd& y, int q,
                        std::vector<double> nu_grid = {});

/// Smoother influence matrix A_nu with fitted = A_nu * y (n x n; for
/// diagnostics and tests on small n).
Eigen::MatrixXd hat_matrix(const Eigen::VectorXd& times, int q, double nu);

/// Per-channel smoothed curves over a common horizon.
struct SmoothedSet {
    std::vector<SmoothedCurve> curves;
    double horizon = 0.0;

    int channels() const { return static_cast<int>(curves.size()); }
    /// channels x times.size() matrix of order-`order` derivatives.
    Eigen::MatrixXd resample(const Eigen::VectorXd& times, int order = 0) const;
};

/// GCV-smoothed curves for every observation channel.
SmoothedSet smooth_observations(const NoisyObservations& obs, int q);

}  // namespace sem
