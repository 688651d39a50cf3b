#pragma once

#include <Eigen/Dense>

#include "sem/grid.hpp"

namespace sem {

/// Iterated-integration kernel of order k:
///   k = 0: identity (Dirac), has no pointwise value
///   k >= 1: G(t,s) = (t-s)^{k-1} / (k-1)!  for t >= s, else 0
/// Optionally perturbed by phi_k(t)^T v(s) where phi_k(t) = (1, t, .., t^{k-1})
/// and v is carried as samples on quadrature nodes.
struct GreensKernel {
    int order = 1;
    Eigen::MatrixXd v_samples;  ///< k x nodes; empty for the canonical kernel
    Eigen::VectorXd v_nodes;

    bool perturbed() const { return v_samples.size() > 0; }
};

GreensKernel greens(int k);
GreensKernel perturbed_greens(int k, Eigen::MatrixXd v_samples, Eigen::VectorXd v_nodes);

/// Pointwise kernel value; throws for k = 0 (no pointwise representation).
double greens_value(const GreensKernel& kernel, double t, double s);

/// Monomial null-space basis of d^k/dt^k: times.size() x k matrix with
/// columns 1, t, .., t^{k-1}.  k = 0 yields an empty matrix.
Eigen::MatrixXd null_basis(int k, const Eigen::VectorXd& times);

/// Weight matrix M with M(i,j) such that (M * samples)(i) approximates
/// int_0^C G(t_i, s) samples(s) ds under the rule.  Rows with t_i on a rule
/// node use the truncated rule over [0, t_i] with end corrections (fourth
/// order on uniform grids); the order-1 kernel's step discontinuity at s = t
/// takes the integrand's left value there.  Off-node rows fall back to the
/// plain rule weights.
Eigen::MatrixXd kernel_matrix(const GreensKernel& kernel, const QuadratureRule& rule,
                              const Eigen::VectorXd& eval_times);

/// Transform of sampled functions (columns of `samples`, length rule.size()).
/// k = 0 returns the samples at eval_times (linear interpolation off-node).
Eigen::MatrixXd integral_transform(const GreensKernel& kernel, const Eigen::MatrixXd& samples,
                                   const QuadratureRule& rule, const Eigen::VectorXd& eval_times);
Eigen::VectorXd integral_transform(const GreensKernel& kernel, const Eigen::VectorXd& samples,
                                   const QuadratureRule& rule, const Eigen::VectorXd& eval_times);

/// Piecewise-linear interpolation of samples given at `nodes`, evaluated at t.
double interp_linear(const Eigen::VectorXd& nodes, const Eigen::VectorXd& samples, double t);

}  // namespace sem
