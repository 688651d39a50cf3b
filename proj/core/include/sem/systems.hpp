#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sem/grid.hpp"

namespace sem {

/// Driving function f_i(X, t): scalar forcing of equation i given the full
/// state vector (p values) and time.
using DrivingFn = std::function<double(const Eigen::VectorXd&, double)>;

/// Order-K system  d^K X_i / dt^K + sum_{l=1}^{K-1} omega(i,l-1) d^l X_i / dt^l = f_i(X, t).
struct OdeSystem {
    int p = 1;
    int K = 1;
    std::vector<DrivingFn> driving;  ///< p entries
    Eigen::MatrixXd omega;           ///< p x (K-1) lower-derivative coefficients
    Eigen::VectorXd init;            ///< length p*K: values block, then derivative blocks 1..K-1
    double horizon = 0.0;
    /// Ground-truth coefficients against a reference feature library, when known:
    /// p x (K-1+D), each row (-omega_i, beta_i).
    std::optional<Eigen::MatrixXd> true_theta;
};

/// Trajectory sampled on a grid with derivatives of orders 0..K
/// (derivatives[0] aliases values).
struct TrajectorySet {
    SimulationGrid grid;
    Eigen::MatrixXd values;                     ///< p x n
    std::vector<Eigen::MatrixXd> derivatives;   ///< K+1 entries, each p x n
};

/// Trajectory corrupted by channel-scaled Gaussian noise.
struct NoisyObservations {
    SimulationGrid grid;
    Eigen::MatrixXd values;   ///< p x n
    Eigen::VectorXd sigma;    ///< per-channel noise SD actually applied
    double gamma = 0.0;
    std::uint64_t seed = 0;
};

/// Classic RK4 advance of dz/dt = rhs(z, t) from t0 over dt in `substeps`
/// equal steps.  Shared by trajectory integration and forward prediction.
Eigen::VectorXd rk4_advance(const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& rhs,
                            Eigen::VectorXd z, double t0, double dt, int substeps);

/// Companion-form right-hand side of an order-K system on the stacked state
/// (values, derivatives 1..K-1).
Eigen::VectorXd companion_rhs(const OdeSystem& sys, const Eigen::VectorXd& z, double t);

/// Integrate on the grid with internal RK4 substep <= min(grid spacing, horizon/2048).
/// Throws divergence_error naming the first non-finite time point.
TrajectorySet integrate(const OdeSystem& sys, const SimulationGrid& grid);

/// Additive iid Gaussian noise with sigma_i^2 = gamma^2 * int_0^C X_i^2 dt / C
/// (trapezoid on the trajectory grid).  Bit-reproducible for a fixed seed.
NoisyObservations add_noise(const TrajectorySet& traj, double gamma, std::uint64_t seed);

/// Frictionless pendulum  d^2 X / dt^2 = -sin(X)  on [0, 20].
/// true_theta refers to the library poly_trig_library(1, 4, true).
OdeSystem pendulum_system();

/// Initial condition draw U([-0.5, 0.5]^2) used by the pendulum study.
Eigen::VectorXd pendulum_random_init(std::uint64_t seed);

/// 40-node two-cluster damped oscillator network on [0, 5]:
///   cluster 1 (i = 1..20):  d^2 X_i = -4 X_i + (-1)^i 1.2 X_{tau1(i)} - 1.3 dX_i/dt
///   cluster 2 (i = 21..40): d^2 X_i = -3.5 X_i + (-1)^i 2 X_{tau2(i)} - 2 dX_i/dt
/// tau1/tau2 are within-cluster permutations (1-based local indices); defaults
/// are the cyclic shifts i -> i+1.  true_theta refers to poly_trig_library(40, 1, false).
OdeSystem ddm_system(const std::vector<int>& tau1 = {}, const std::vector<int>& tau2 = {});

}  // namespace sem
