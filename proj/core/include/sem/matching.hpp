#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sem/basis.hpp"
#include "sem/greens.hpp"
#include "sem/grid.hpp"
#include "sem/smoothing.hpp"

namespace sem {

/// Weighted sparse regression problem produced by order-k matching of an
/// order-K equation: response = theta_block * theta + alpha_block * alpha,
/// evaluated at quadrature nodes with the rule weights as loss weights.
/// theta stacks (-omega_i, beta_i); alpha spans the order-k monomial null space.
struct MatchingProblem {
    int equation = 0;
    int K = 1;
    int k = 0;  ///< matching order: 0 = gradient matching, K = derivative-free
    QuadratureRule rule;
    Eigen::VectorXd response;
    Eigen::MatrixXd theta_block;  ///< nodes x (K-1+D)
    Eigen::MatrixXd alpha_block;  ///< nodes x k
    std::vector<std::string> column_labels;

    /// Node samples retained so kernel-perturbation maps can be applied
    /// without re-deriving the inputs.
    Eigen::VectorXd xi_samples;     ///< X_i at the nodes
    Eigen::MatrixXd basis_samples;  ///< nodes x D feature values
};

/// Sparse fit of one equation: theta = (-omega, beta), alpha free.
struct SparseSolution {
    int equation = 0;
    int K = 1;
    int k = 0;
    double lambda = 0.0;
    Eigen::VectorXd theta;
    Eigen::VectorXd alpha;
    double objective = 0.0;
    std::vector<std::string> labels;
    Eigen::VectorXd scales;  ///< column norms the solver standardized by

    Eigen::VectorXd omega() const { return -theta.head(K - 1); }
    Eigen::VectorXd beta() const { return theta.tail(theta.size() - (K - 1)); }
    std::vector<int> support() const;
};

nlohmann::json solution_to_json(const SparseSolution& s);
SparseSolution solution_from_json(const nlohmann::json& j);

struct LassoOptions {
    double tol = 1e-9;      ///< max standardized coefficient change per sweep
    int max_sweeps = 10000;
    std::optional<Eigen::VectorXd> scales;  ///< pin column scales externally
    /// Cross-validation picks the largest lambda whose mean error stays within
    /// one standard error of the minimum; false reverts to the plain minimum.
    bool cv_one_se = true;
};

/// Weighted coordinate-descent LASSO with the alpha block refit by exact
/// weighted least squares each sweep.  Columns are standardized to unit
/// weighted norm net of the alpha span internally; reported coefficients are
/// unscaled; standardized magnitudes below 1e-12, or below 1e-6 of the largest
/// one, snap to zero.  Solves are warm-started down a geometric path from
/// lambda_max to the target, and ties between optima that agree to numerical
/// tolerance resolve toward the sparsest support.
SparseSolution lasso_solve(const MatchingProblem& prob, double lambda,
                           const LassoOptions& opts = {});

/// Smallest lambda with an all-zero theta: max absolute weighted correlation
/// of the standardized columns with the alpha-residualized response.
double lambda_max(const MatchingProblem& prob);

/// count log-spaced values from lambda_max down to min_ratio * lambda_max.
std::vector<double> default_lambda_grid(const MatchingProblem& prob, int count = 50,
                                        double min_ratio = 1e-2);

struct CvResult {
    SparseSolution fit;  ///< refit on all data at the selected lambda
    double lambda = 0.0;
    std::vector<double> lambda_grid;
    std::vector<double> cv_error;
    std::vector<double> cv_se;  ///< standard error of the fold scores per lambda
};

/// Blocked cross-validation: the time span is cut into n_folds contiguous
/// intervals; each fold's nodes are held out by masking their weights, and the
/// fold score is the held-out weighted residual energy.  The selected lambda is
/// the largest one within one standard error of the minimizer (see
/// LassoOptions::cv_one_se); exact ties resolve toward larger lambda.
CvResult cv_select_lambda(const MatchingProblem& prob, std::vector<double> lambda_grid = {},
                          int n_folds = 10, const LassoOptions& opts = {});

/// Assemble the order-k matching problem for one equation from smoothed
/// curves, resampled on the rule nodes.
MatchingProblem build_problem(const SmoothedSet& curves, const BasisLibrary& lib,
                              int K, int k, int equation, const QuadratureRule& rule);

/// Same, from raw node samples: values is p x nodes, derivatives[order] holds
/// d^order X (orders 0..K-k needed when k < K; derivatives[0] = values).
/// `kernels` optionally substitutes perturbed kernels, matched by order.
MatchingProblem build_problem_from_samples(const Eigen::MatrixXd& values,
                                           const std::vector<Eigen::MatrixXd>& derivatives,
                                           const BasisLibrary& lib, int K, int k, int equation,
                                           const QuadratureRule& rule,
                                           const std::vector<GreensKernel>& kernels = {});

/// Even trapezoid rule with one node per observation time on [0, horizon].
QuadratureRule default_quadrature(double horizon, int n_observations);

struct FitOptions {
    int n_lambda = 50;
    double lambda_min_ratio = 1e-2;
    int n_folds = 10;
    int workers = 1;
    LassoOptions lasso;
};

/// Cross-validated sparse fits for every equation at matching order k.
/// Feature transforms shared across equations are assembled once.
std::vector<SparseSolution> fit_equations(const SmoothedSet& curves, const BasisLibrary& lib,
                                          int K, int k, const QuadratureRule& rule,
                                          const FitOptions& opts = {});

/// Derivative-free fit: matching order k = K.
std::vector<SparseSolution> fit_sem(const SmoothedSet& curves, const BasisLibrary& lib, int K,
                                    const QuadratureRule& rule, const FitOptions& opts = {});

/// Gradient-matching baseline: k = 0 (regress the order-K derivative on features).
std::vector<SparseSolution> fit_sindy(const SmoothedSet& curves, const BasisLibrary& lib, int K,
                                      const QuadratureRule& rule, const FitOptions& opts = {});

/// Effect of admissible kernel perturbations G_k + phi_k(t)^T v_k(s): theta is
/// unchanged while alpha moves by a computable linear map.  Solves the
/// canonical and perturbed problems at the same lambda (and the same column
/// scales, so the penalties agree), then inverts the alpha map.
struct InvarianceReport {
    double theta_gap = 0.0;       ///< max |theta_perturbed - theta_canonical|
    double alpha_residual = 0.0;  ///< max |inverse-mapped alpha - canonical alpha|
    SparseSolution canonical;
    SparseSolution perturbed;
};

/// v[m-1] is the m x nodes sample matrix of v_m, m = 1..K.
InvarianceReport invariance_check(const MatchingProblem& prob,
                                  const std::vector<Eigen::MatrixXd>& v, double lambda,
                                  const LassoOptions& opts = {});

/// KKT diagnostics in the standardized coordinates of a solve.
struct KktReport {
    Eigen::VectorXd gradient;          ///< smooth-part gradient per theta column
    double max_violation_zero = 0.0;   ///< max(|g| - lambda) over zero coords
    double max_violation_support = 0.0;///< max ||g| - lambda| over the support
};
KktReport kkt_check(const MatchingProblem& prob, const SparseSolution& sol);

}  // namespace sem
