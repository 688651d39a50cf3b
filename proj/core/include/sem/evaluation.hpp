#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sem/basis.hpp"
#include "sem/matching.hpp"
#include "sem/systems.hpp"

namespace sem {

/// Relative estimation error of the driving functions: per equation,
/// ||f_hat - f||_2 / ||f||_2 in RMS over the sampled states, averaged over
/// equations.  f_hat is the feature expansion H(x)^T beta_hat.
double rer(const std::vector<SparseSolution>& fits, const OdeSystem& truth,
           const BasisLibrary& lib, const Eigen::MatrixXd& sample_states,
           const Eigen::VectorXd& sample_times);

/// Adjacency of discovered dependence: a(i, j) = 1 when equation i's supported
/// features depend on variable j; the diagonal is also set when any omega_hat
/// entry of equation i is nonzero.
Eigen::MatrixXi adjacency_from_solutions(const std::vector<SparseSolution>& fits,
                                         const BasisLibrary& lib, int p);

/// Same rule applied to a coefficient matrix with rows (-omega_i, beta_i).
Eigen::MatrixXi adjacency_from_theta(const Eigen::MatrixXd& theta, const BasisLibrary& lib,
                                     int K);

/// Entrywise agreement between two adjacencies, divided by p^2.
double matching_accuracy(const Eigen::MatrixXi& estimated, const Eigen::MatrixXi& truth);

/// Phase-plane field of one second-order equation: at (x, v) the arrow is
/// (v, acceleration), with the other coordinates pinned at `pinned`.
struct VectorField {
    Eigen::VectorXd positions;
    Eigen::VectorXd velocities;
    Eigen::MatrixXd dx;         ///< arrow first component (= v), positions x velocities
    Eigen::MatrixXd dv;         ///< arrow second component (acceleration)
    Eigen::MatrixXd magnitude;
};

VectorField vector_field(const OdeSystem& sys, int equation, double pos_lo, double pos_hi,
                         double vel_lo, double vel_hi, int resolution,
                         const Eigen::VectorXd& pinned);
VectorField vector_field(const SparseSolution& fit, const BasisLibrary& lib, int p,
                         double pos_lo, double pos_hi, double vel_lo, double vel_hi,
                         int resolution, const Eigen::VectorXd& pinned);

void write_vector_field_csv(const std::string& path, const VectorField& field);

/// Build a simulatable system from fitted equations.
OdeSystem discovered_system(const std::vector<SparseSolution>& fits, const BasisLibrary& lib,
                            int K, double horizon);

/// One-step-ahead forecast: advance the model from the stacked state
/// (values, derivatives 1..K-1) at t0 over dt with RK4 (>= min_substeps).
/// Returns nothing when the step diverges (flagged prediction).
std::optional<Eigen::VectorXd> predict_forward(const OdeSystem& model,
                                               const Eigen::VectorXd& init, double t0,
                                               double dt, int min_substeps = 8);

/// Relative prediction error across channels:
/// (1/p) * sqrt( sum_i sum_j (pred - ref)^2 / sum_j ref^2 ).
double rpe(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& reference);

}  // namespace sem
