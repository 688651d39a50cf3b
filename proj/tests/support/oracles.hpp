#pragma once

// Reference implementations used to cross-check the library, written with
// deliberately different algorithms: sign-pattern enumeration and proximal
// gradient instead of coordinate descent, direct summation instead of stable
// recurrences, exact Pascal-triangle combinatorics instead of log-gamma.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sem/matching.hpp"

namespace oracle {

/// sum_j w_j r_j^2 + lambda * sum_d s_d |theta_d| in original coordinates.
inline double penalized_objective(const sem::MatchingProblem& prob, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& alpha, double lambda,
                                  const Eigen::VectorXd& scales) {
    Eigen::VectorXd r = prob.response - prob.theta_block * theta;
    if (prob.alpha_block.cols() > 0 && alpha.size() > 0) r -= prob.alpha_block * alpha;
    const double quad = (prob.rule.weights.array() * r.array().square()).sum();
    return quad + lambda * (scales.array() * theta.array().abs()).sum();
}

struct EnumerationResult {
    double objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd theta;
    Eigen::VectorXd alpha;
    bool found = false;
};

/// Global LASSO minimum by enumerating the 3^D sign patterns of theta.  For
/// each pattern the restricted problem is an equality-free quadratic whose
/// stationarity system is linear; a candidate is kept when its solution
/// reproduces the pattern and the zero coordinates satisfy the subgradient
/// bound.  The optimum's own pattern always passes both checks, so the best
/// verified candidate is the global minimizer.  Degenerate (collinear) active
/// sets are handled by a minimum-norm solve.
inline EnumerationResult lasso_enumerate(const sem::MatchingProblem& prob, double lambda,
                                         const Eigen::VectorXd& scales, double tol = 1e-8) {
    const int D = static_cast<int>(prob.theta_block.cols());
    const int m = static_cast<int>(prob.alpha_block.cols());
    const Eigen::VectorXd& w = prob.rule.weights;
    const Eigen::MatrixXd& Z = prob.theta_block;
    const Eigen::MatrixXd& F = prob.alpha_block;
    const Eigen::VectorXd& y = prob.response;

    EnumerationResult best;
    long patterns = 1;
    for (int d = 0; d < D; ++d) patterns *= 3;

    std::vector<int> sign(D);
    for (long code = 0; code < patterns; ++code) {
        long c = code;
        std::vector<int> active;
        for (int d = 0; d < D; ++d, c /= 3) {
            sign[d] = static_cast<int>(c % 3) - 1;
            if (sign[d] != 0) active.push_back(d);
        }
        const int a = static_cast<int>(active.size());

        Eigen::MatrixXd M(y.size(), a + m);
        for (int j = 0; j < a; ++j) M.col(j) = Z.col(active[j]);
        if (m > 0) M.rightCols(m) = F;

        Eigen::MatrixXd MtWM = M.transpose() * w.asDiagonal() * M;
        Eigen::VectorXd rhs = M.transpose() * (w.asDiagonal() * y);
        for (int j = 0; j < a; ++j) rhs[j] -= 0.5 * lambda * sign[active[j]] * scales[active[j]];

        Eigen::VectorXd x = MtWM.completeOrthogonalDecomposition().solve(rhs);
        const double stat = (MtWM * x - rhs).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        if (stat > tol * scale) continue;

        Eigen::VectorXd theta = Eigen::VectorXd::Zero(D);
        bool consistent = true;
        for (int j = 0; j < a; ++j) {
            theta[active[j]] = x[j];
            if (x[j] * sign[active[j]] < -tol) consistent = false;
        }
        if (!consistent) continue;

        Eigen::VectorXd alpha = m > 0 ? x.tail(m).eval() : Eigen::VectorXd();
        Eigen::VectorXd r = y - M * x;
        Eigen::VectorXd g = -2.0 * Z.transpose() * (w.asDiagonal() * r);
        for (int d = 0; d < D; ++d) {
            if (theta[d] != 0.0) continue;
            if (std::abs(g[d]) > lambda * scales[d] + tol * std::max(1.0, lambda * scales[d]))
                consistent = false;
        }
        if (!consistent) continue;

        const double obj = penalized_objective(prob, theta, alpha, lambda, scales);
        if (obj < best.objective) {
            best.objective = obj;
            best.theta = theta;
            best.alpha = alpha;
            best.found = true;
        }
    }
    return best;
}

/// FISTA on the standardized problem; returns the objective reached.  Slow
/// but shares no machinery with coordinate descent.
inline double lasso_fista(const sem::MatchingProblem& prob, double lambda,
                          const Eigen::VectorXd& scales, int iters = 60000) {
    const int D = static_cast<int>(prob.theta_block.cols());
    const int m = static_cast<int>(prob.alpha_block.cols());
    const Eigen::VectorXd sw = prob.rule.weights.array().sqrt();

    Eigen::MatrixXd A(prob.response.size(), D + m);
    for (int d = 0; d < D; ++d) A.col(d) = sw.asDiagonal() * prob.theta_block.col(d) / scales[d];
    if (m > 0) A.rightCols(m) = sw.asDiagonal() * prob.alpha_block;
    Eigen::VectorXd b = sw.asDiagonal() * prob.response;

    const double L =
        2.0 * Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0) *
        Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
    const double eta = 1.0 / L;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(D + m), z = x;
    double tk = 1.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd g = 2.0 * A.transpose() * (A * z - b);
        Eigen::VectorXd xn = z - eta * g;
        for (int d = 0; d < D; ++d) {
            const double thr = eta * lambda;
            xn[d] = xn[d] > thr ? xn[d] - thr : (xn[d] < -thr ? xn[d] + thr : 0.0);
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        z = xn + ((tk - 1.0) / tn) * (xn - x);
        if ((xn - x).cwiseAbs().maxCoeff() < 1e-14 && it > 100) {
            x = xn;
            break;
        }
        x = xn;
        tk = tn;
    }

    Eigen::VectorXd theta(D);
    for (int d = 0; d < D; ++d) theta[d] = x[d] / scales[d];
    Eigen::VectorXd alpha = m > 0 ? x.tail(m).eval() : Eigen::VectorXd();
    return penalized_objective(prob, theta, alpha, lambda, scales);
}

/// Pascal's triangle in long double; exact for n <= 64.
inline long double choose_ld(int n, int k) {
    if (k < 0 || k > n) return 0.0L;
    std::vector<long double> row(static_cast<size_t>(n) + 1, 0.0L);
    row[0] = 1.0L;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j >= 1; --j) row[j] += row[j - 1];
    return row[k];
}

/// P[Bin(n, p0) >= s] by direct summation.
inline double binomial_tail_sum(int n, int s, double p0) {
    if (s <= 0) return 1.0;
    if (s > n) return 0.0;
    const long double p = p0, q = 1.0L - p0;
    long double total = 0.0L;
    for (int k = s; k <= n; ++k)
        total += choose_ld(n, k) * std::pow(p, k) * std::pow(q, n - k);
    return static_cast<double>(std::min(total, 1.0L));
}

/// One-sided (greater) Fisher exact p by hypergeometric enumeration.
inline double fisher_enumerate(int a, int b, int c, int d) {
    const int r1 = a + b, r2 = c + d, c1 = a + c;
    const int lo = std::max(0, c1 - r2), hi = std::min(r1, c1);
    long double num = 0.0L, den = 0.0L;
    for (int x = lo; x <= hi; ++x) {
        const long double mass = choose_ld(r1, x) * choose_ld(r2, c1 - x);
        den += mass;
        if (x >= a) num += mass;
    }
    return den > 0.0L ? static_cast<double>(num / den) : 1.0;
}

/// Benjamini-Hochberg by the textbook scan: largest r with p_(r) <= alpha r/m,
/// then reject everything at or below that order statistic.
inline std::vector<bool> bh_scan(const std::vector<double>& p, double alpha) {
    const int m = static_cast<int>(p.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return p[i] < p[j]; });
    double threshold = -1.0;
    for (int r = m; r >= 1; --r)
        if (p[order[r - 1]] <= alpha * r / m) {
            threshold = p[order[r - 1]];
            break;
        }
    std::vector<bool> reject(m, false);
    if (threshold >= 0.0)
        for (int i = 0; i < m; ++i) reject[i] = p[i] <= threshold;
    return reject;
}

inline double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace oracle
